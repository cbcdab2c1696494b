#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pdmp/affine_map.hpp"
#include "pdmp/gp_regression.hpp"
#include "pdmp/rng.hpp"

namespace pdmp {

enum class SurrogateKind { constant, random_gradient, laplace, gp, grad_gp, adaptive_gp };

std::string to_string(SurrogateKind kind);
/// Throws std::invalid_argument for unknown names.
SurrogateKind parse_surrogate_kind(const std::string& name);

/// Approximate potential over whitened coordinates. Value and gradient never query the
/// true model. GP kinds model the residual Psi~ - Psi_L on top of the Laplace quadratic
/// Psi_L(xi) = xi^T xi / 2 + c.
class Surrogate {
 public:
  static Surrogate constant(Eigen::Index dim);
  static Surrogate random_gradient(Eigen::Index dim, std::uint64_t seed);
  /// c = Psi~(0); costs one counted evaluation.
  static Surrogate laplace(TransformedPotential& tp);
  /// Draws n0 points from N(0, I), evaluates the true potential there (n0 counted
  /// evaluations, plus one for c) and fits a residual GP. `kind` must be gp, grad_gp or
  /// adaptive_gp; only grad_gp trains on gradient residuals.
  static Surrogate gaussian_process(TransformedPotential& tp, SurrogateKind kind, int n0, std::uint64_t seed,
                                    const gp::FitOptions& fit = {});

  SurrogateKind kind() const { return kind_; }
  Eigen::Index dimension() const { return dim_; }

  double value(const Vector& xi) const;
  Vector gradient(const Vector& xi) const;

  /// When the gradient is affine with unit-free slope k (gradient(xi + s v) =
  /// gradient(xi) + s k v), returns k. Empty for GP kinds.
  std::optional<double> affine_gradient_slope() const;

  /// Called at the start of each candidate-generation attempt; the random-gradient
  /// kind redraws its gradient here.
  void begin_attempt();

  /// Harvests a true-potential observation. Only the adaptive kind uses it.
  void observe(const Vector& xi, double value);

  double laplace_const() const { return c_; }
  const gp::Model* model() const { return model_ ? model_.get() : nullptr; }
  std::size_t trained_size() const { return model_ ? model_->dataset().size() : 0; }
  const std::vector<std::size_t>& milestones() const { return milestones_; }
  int refit_count() const { return refits_; }
  int refit_failures() const { return refit_failures_; }

  static constexpr std::size_t kHardCap = 1000;

 private:
  Surrogate(SurrogateKind kind, Eigen::Index dim) : kind_(kind), dim_(dim) {}
  void refit_to(std::size_t target);

  SurrogateKind kind_;
  Eigen::Index dim_;
  double c_ = 0.0;
  std::shared_ptr<const gp::Model> model_;
  std::optional<Rng> rng_;
  Vector random_grad_;
  // adaptive state
  std::vector<std::size_t> milestones_;
  std::size_t next_milestone_ = 0;
  std::vector<std::pair<Vector, double>> pending_;
  gp::FitOptions refit_options_;
  int refits_ = 0;
  int refit_failures_ = 0;
};

}  // namespace pdmp
