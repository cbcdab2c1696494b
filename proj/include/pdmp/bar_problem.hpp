#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "pdmp/potential.hpp"

namespace pdmp {

/// Squared-exponential Gaussian-process prior on the log Young's modulus field.
struct PriorSpec {
  double mean_field = 1.0;
  double signal_std = 1.0;
  double length_scale = 0.3;
  Eigen::Index dimension = 2;

  void validate() const;
};

/// The field prior restricted to d piecewise-constant cells on [0, 1].
struct ProjectedPrior {
  Vector mean;
  Matrix covariance;
  /// Lower Cholesky factor of `covariance`.
  Matrix chol;
  Matrix precision;
};

/// Cov(theta_i, theta_j) = d^2 * double integral of the field kernel over cell i x cell j,
/// evaluated through the closed-form antiderivative.
ProjectedPrior project_prior(const PriorSpec& spec);

struct Observations {
  Vector sensor_locations;
  Vector values;
  double noise_std = 0.025;

  Eigen::Index size() const { return sensor_locations.size(); }
};

/// Tip-loaded bar on [0, 1] with unit load and modulus exp(theta_i) on cell i:
/// u(x) = sum over cells of (overlap of [0, x] with the cell) / exp(theta_i).
/// Throws std::invalid_argument for x outside [0, 1].
double forward_displacement(const Vector& theta, double x);

/// Sensitivities du(x)/dtheta_i.
Vector forward_sensitivity(const Vector& theta, double x);

/// Posterior potential 1/2 |u_obs - u(theta)|^2 / sigma^2 + 1/2 (theta - mu)^T C^-1 (theta - mu).
/// With no sensors only the prior term remains.
class BarPotential final : public Potential {
 public:
  BarPotential(ProjectedPrior prior, Observations obs);

  Eigen::Index dimension() const override { return prior_.mean.size(); }
  Evaluation evaluate(const Vector& theta, EvalRequest request = {}) const override;

  const ProjectedPrior& prior() const { return prior_; }
  const Observations& observations() const { return obs_; }

 private:
  ProjectedPrior prior_;
  Observations obs_;
  // overlap_(k, i): length of [0, x_k] inside cell i
  Matrix overlap_;
};

/// Number of sensors used for a d-dimensional problem: floor(3d/4).
Eigen::Index sensor_count(Eigen::Index d);
/// Equidistant interior sensors i/(m+1), i = 1..m.
Vector sensor_locations(Eigen::Index m);

struct SyntheticProblem {
  Eigen::Index d = 0;
  std::uint64_t seed = 0;
  Vector theta_star;
  Observations observations;
};

/// Ground truth drawn from the projected prior, displacements observed at floor(3d/4)
/// sensors with Gaussian noise of std `noise_std`. Deterministic per seed.
SyntheticProblem generate_synthetic(const PriorSpec& spec, std::uint64_t seed, double noise_std = 0.025);

std::string synthetic_to_json(const SyntheticProblem& p);
SyntheticProblem synthetic_from_json(const std::string& text);

}  // namespace pdmp
