#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <vector>

#include "pdmp/affine_map.hpp"

namespace pdmp {

/// MCMC output: one row per iteration (the state after that iteration).
struct Chain {
  Matrix states;
  std::vector<bool> accepted;
  /// Cumulative evaluation counter of the potential after each iteration.
  std::vector<std::uint64_t> evaluations;

  Eigen::Index size() const { return states.rows(); }
};

/// Rows iteration,xi_1..xi_d,accepted,n_evals_cumulative.
void write_chain_csv(std::ostream& out, const Chain& chain);

/// Proposal-covariance schedule of the adaptive random walk: rescale by 0.9 / 1.1 every
/// 100 iterations when the window acceptance is below 0.2 / above 0.25, switch to the
/// empirical chain covariance times 2.38^2/d at iteration 1000, freeze after 2000.
class RwmAdapter {
 public:
  explicit RwmAdapter(Eigen::Index dim);

  /// Call after iteration `iteration` (1-based) with its outcome and resulting state.
  void update(std::uint64_t iteration, bool accepted, const Vector& state);

  const Matrix& covariance() const { return cov_; }
  /// Lower Cholesky factor of the covariance.
  const Matrix& factor() const { return factor_; }
  bool frozen(std::uint64_t iteration) const { return iteration > kFreeze; }

  static constexpr std::uint64_t kWindow = 100;
  static constexpr std::uint64_t kSwitch = 1000;
  static constexpr std::uint64_t kFreeze = 2000;

 private:
  void refactor();

  Eigen::Index dim_;
  Matrix cov_;
  Matrix factor_;
  std::uint64_t window_accepts_ = 0;
  // running chain moments (Welford)
  std::uint64_t n_ = 0;
  Vector mean_;
  Matrix m2_;
};

struct RwmOptions {
  std::uint64_t iterations = 1000;
  std::uint64_t seed = 0;
  std::uint64_t max_evaluations = std::numeric_limits<std::uint64_t>::max();
};

/// Adaptive random-walk Metropolis. The initial state costs one evaluation, every
/// proposal one more. Stops early once the evaluation counter reaches max_evaluations.
Chain rwm_run(TransformedPotential& tp, const Vector& xi0, const RwmOptions& options);

struct NutsOptions {
  std::uint64_t iterations = 1000;
  std::uint64_t seed = 0;
  std::uint64_t max_evaluations = std::numeric_limits<std::uint64_t>::max();
  double target_accept = 0.8;
  std::uint64_t adapt_iterations = 200;
  int max_depth = 10;
  double gamma = 0.05;
  double t0 = 10.0;
  double kappa = 0.75;
  double max_energy_error = 1000.0;
  /// Fixed step size; when positive, adaptation is skipped.
  double step_size = 0.0;
};

struct NutsDiagnostics {
  double final_step_size = 0.0;
  std::uint64_t divergences = 0;
  /// Mean acceptance statistic over the post-adaptation iterations (or all, if none).
  double mean_accept_stat = 0.0;
  std::vector<int> tree_depths;
};

/// No-U-Turn sampler, slice formulation, with dual averaging of the step size.
/// Each leapfrog step costs one evaluation.
Chain nuts_run(TransformedPotential& tp, const Vector& xi0, const NutsOptions& options,
               NutsDiagnostics* diagnostics = nullptr);

struct PhasePoint {
  Vector q;
  Vector p;
  Vector grad;
  double potential = 0.0;
};

/// One leapfrog step of size eps for H(q, p) = potential(q) + |p|^2 / 2.
PhasePoint leapfrog(TransformedPotential& tp, const PhasePoint& z, double eps);

}  // namespace pdmp
