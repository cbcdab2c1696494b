#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pdmp/types.hpp"

namespace pdmp::gp {

/// Hyperparameters of the constant-mean GP with anisotropic squared-exponential kernel.
struct Hyperparams {
  double mean_const = 0.0;
  double signal_var = 1.0;
  Vector length_scales;
  double noise_var = 1e-6;

  Eigen::Index dimension() const { return length_scales.size(); }
  /// Throws std::invalid_argument when a positivity constraint is violated.
  void validate() const;

  /// Packs as (m, signal_var, l_1..l_d, noise_var).
  Vector pack() const;
  static Hyperparams unpack(const Vector& packed);

  static Hyperparams defaults(Eigen::Index dim);
};

/// Training data: inputs, scalar targets and optional gradient observations.
class Dataset {
 public:
  Dataset(Eigen::Index dim, bool with_gradients);

  /// Appends an observation. Throws std::invalid_argument on dimension mismatch
  /// or when `x` duplicates an existing input within 1e-12 (max-norm).
  void add(const Vector& x, double y, const Vector& g = Vector());
  bool contains(const Vector& x, double tol = 1e-12) const;

  Eigen::Index dimension() const { return dim_; }
  std::size_t size() const { return inputs_.size(); }
  bool empty() const { return inputs_.empty(); }
  bool has_gradients() const { return with_gradients_; }

  const Vector& input(std::size_t i) const { return inputs_[i]; }
  double value(std::size_t i) const { return values_[i]; }
  const Vector& gradient(std::size_t i) const { return gradients_[i]; }

  /// Copy of this dataset with gradient observations dropped.
  Dataset without_gradients() const;

 private:
  Eigen::Index dim_;
  bool with_gradients_;
  std::vector<Vector> inputs_;
  std::vector<double> values_;
  std::vector<Vector> gradients_;
};

// Kernel primitives. All throw std::invalid_argument on dimension mismatch.

/// sigma_f^2 exp(-1/2 sum_j (a_j - b_j)^2 / l_j^2)
double kernel_eval(const Vector& a, const Vector& b, const Hyperparams& h);
/// Gradient of kernel_eval with respect to its first argument.
Vector kernel_grad_x(const Vector& a, const Vector& b, const Hyperparams& h);
/// d^2 k / (d a_p d b_q), zero-based indices.
double kernel_cross_derivative(const Vector& a, const Vector& b, Eigen::Index p, Eigen::Index q,
                               const Hyperparams& h);

/// Relative jitter bounds: the diagonal gets noise_var + jitter * signal_var.
inline constexpr double kJitterFloor = 1e-8;
inline constexpr double kJitterCeiling = 1e-2;

/// Joint covariance of (values, gradients) for the dataset, without noise or jitter.
/// Layout: N value rows, then N*d gradient rows ordered point-major.
Matrix joint_covariance(const Dataset& data, const Hyperparams& h, bool include_gradients);

struct LmlResult {
  double value = 0.0;
  /// Gradient in packed order (m, signal_var, l_1..l_d, noise_var).
  Vector gradient;
};

/// Log marginal likelihood and its gradient at fixed relative jitter.
/// Returns nullopt when the covariance is not numerically SPD.
std::optional<LmlResult> log_marginal_likelihood(const Dataset& data, const Hyperparams& h,
                                                 bool include_gradients,
                                                 double relative_jitter = kJitterFloor);

struct FitOptions {
  int max_iterations = 200;
  double gradient_tolerance = 1e-6;
  double function_tolerance = 1e-10;
  int max_evaluations = 2000;  // per start
  int restarts = 3;
  std::uint64_t seed = 0x5eed;
  bool optimize = true;
};

/// Fitted model. Immutable once built.
class Model {
 public:
  Model(Hyperparams h, Dataset data, bool include_gradients);

  const Hyperparams& hyperparams() const { return h_; }
  const Dataset& dataset() const { return data_; }
  bool uses_gradients() const { return include_gradients_; }
  double relative_jitter() const { return jitter_; }
  const Matrix& cholesky_factor() const { return chol_; }
  const Vector& alpha() const { return alpha_; }
  double log_marginal_likelihood() const { return lml_; }

  double predict_mean(const Vector& x) const;
  double predict_variance(const Vector& x) const;
  Vector predict_mean_grad(const Vector& x) const;

 private:
  Vector cross_covariance(const Vector& x) const;
  void check_dim(const Vector& x) const;

  Hyperparams h_;
  Dataset data_;
  bool include_gradients_;
  double jitter_ = kJitterFloor;
  Matrix chol_;
  Vector alpha_;
  double lml_ = 0.0;
  // cached 1/l^2
  Vector inv_sq_;
};

/// Maximizes the log marginal likelihood from `init` (quasi-Newton in log space for
/// the positive parameters) and returns the model at the optimum.
Model fit(const Dataset& data, const Hyperparams& init, bool include_gradients,
          const FitOptions& options = {});

/// CSV with header x_1..x_d,y[,g_1..g_d].
void write_dataset_csv(std::ostream& out, const Dataset& data);
Dataset read_dataset_csv(std::istream& in);

}  // namespace pdmp::gp
