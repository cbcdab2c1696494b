#pragma once

#include <memory>

#include "pdmp/potential.hpp"

namespace pdmp {

/// Whitening change of variables xi = L^T (x - x_map), where H = L L^T is the
/// Hessian of the potential at its mode.
class AffineMap {
 public:
  /// Throws std::invalid_argument unless `chol` is square, lower-triangular and has a
  /// positive diagonal.
  AffineMap(Vector map_point, Matrix chol);
  static AffineMap identity(Eigen::Index dim);

  Eigen::Index dimension() const { return map_point_.size(); }
  const Vector& map_point() const { return map_point_; }
  const Matrix& chol_factor() const { return chol_; }

  Vector to_whitened(const Vector& x) const;
  Vector from_whitened(const Vector& xi) const;
  /// L^-1 g: pulls a gradient in x back to whitened coordinates.
  Vector gradient_to_whitened(const Vector& g) const;
  /// L^-1 H L^-T
  Matrix hessian_to_whitened(const Matrix& H) const;
  /// L^-T v: maps a whitened direction to x space.
  Vector direction_from_whitened(const Vector& v) const;

 private:
  Vector map_point_;
  Matrix chol_;
  bool identity_ = false;
};

/// Minimizes the potential with BFGS followed by Newton polishing. Throws
/// OptimizationError (carrying the best iterate) when the gradient norm stays above tol.
Vector find_map(const Potential& p, const Vector& x0, double tol = 1e-8);

/// find_map plus a Cholesky factorization of the Hessian at the mode. A Hessian that is
/// not positive definite there is a hard NumericError.
AffineMap build_map(const Potential& p, const Vector& x0, double tol = 1e-8);

/// Psi~(xi) = Psi(x_map + L^-T xi), with its own evaluation counter.
class TransformedPotential {
 public:
  TransformedPotential(std::shared_ptr<const Potential> base, std::shared_ptr<const AffineMap> map);

  Eigen::Index dimension() const { return map_->dimension(); }
  /// Counted evaluation in whitened coordinates.
  Evaluation evaluate(const Vector& xi, EvalRequest request = {});
  std::uint64_t evaluations() const { return counter_.count(); }

  const Potential& base() const { return *base_; }
  const AffineMap& map() const { return *map_; }
  std::shared_ptr<const Potential> base_ptr() const { return base_; }
  std::shared_ptr<const AffineMap> map_ptr() const { return map_; }

 private:
  std::shared_ptr<const Potential> base_;
  std::shared_ptr<const AffineMap> map_;
  EvalCounter counter_;
};

}  // namespace pdmp
