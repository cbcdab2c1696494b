#include "pdmp/affine_map.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "pdmp/errors.hpp"
#include "pdmp/optimize.hpp"

namespace pdmp {

AffineMap::AffineMap(Vector map_point, Matrix chol) : map_point_(std::move(map_point)), chol_(std::move(chol)) {
  const Eigen::Index d = map_point_.size();
  if (chol_.rows() != d || chol_.cols() != d) throw std::invalid_argument("AffineMap: factor shape mismatch");
  if (!chol_.isLowerTriangular(0.0)) throw std::invalid_argument("AffineMap: factor not lower-triangular");
  if (!(chol_.diagonal().array() > 0.0).all()) {
    throw std::invalid_argument("AffineMap: factor diagonal must be positive");
  }
  identity_ = map_point_.isZero(0.0) && chol_.isIdentity(0.0);
}

AffineMap AffineMap::identity(Eigen::Index dim) {
  return AffineMap(Vector::Zero(dim), Matrix::Identity(dim, dim));
}

Vector AffineMap::to_whitened(const Vector& x) const {
  if (identity_) return x;
  return chol_.transpose() * (x - map_point_);
}

Vector AffineMap::from_whitened(const Vector& xi) const {
  if (identity_) return xi;
  return map_point_ + direction_from_whitened(xi);
}

Vector AffineMap::gradient_to_whitened(const Vector& g) const {
  if (identity_) return g;
  return chol_.triangularView<Eigen::Lower>().solve(g);
}

Matrix AffineMap::hessian_to_whitened(const Matrix& H) const {
  if (identity_) return H;
  const auto L = chol_.triangularView<Eigen::Lower>();
  const Matrix A = L.solve(H);                              // L^-1 H
  Matrix out = L.solve(A.transpose()).transpose();          // (L^-1 (L^-1 H)^T)^T
  return 0.5 * (out + out.transpose());
}

Vector AffineMap::direction_from_whitened(const Vector& v) const {
  if (identity_) return v;
  return chol_.transpose().triangularView<Eigen::Upper>().solve(v);
}

Vector find_map(const Potential& p, const Vector& x0, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("find_map: tol must be positive");
  if (x0.size() != p.dimension()) throw std::invalid_argument("find_map: x0 dimension mismatch");
  Objective objective = [&p](const Vector& x, Vector& grad) {
    const Evaluation e = p.evaluate(x);
    if (e.saturated) return std::numeric_limits<double>::infinity();
    grad = e.gradient;
    return e.value;
  };
  BfgsOptions options;
  options.gradient_tolerance = tol;
  BfgsResult res = minimize_bfgs(objective, x0, options);
  Vector x = res.x;
  double gnorm = res.gradient.norm();

  // Newton polishing from the BFGS iterate.
  for (int it = 0; it < 20 && !(gnorm < tol); ++it) {
    const Evaluation e = p.evaluate(x, {true, true});
    Eigen::LLT<Matrix> llt(e.hessian);
    if (llt.info() != Eigen::Success) break;
    const Vector step = llt.solve(e.gradient);
    const Vector candidate = x - step;
    const Evaluation ec = p.evaluate(candidate);
    if (ec.saturated || !(ec.gradient.norm() < gnorm)) break;
    x = candidate;
    gnorm = ec.gradient.norm();
  }
  if (!(gnorm < tol)) throw OptimizationError("find_map: gradient tolerance not met", x, gnorm);
  return x;
}

AffineMap build_map(const Potential& p, const Vector& x0, double tol) {
  const Vector x = find_map(p, x0, tol);
  const Matrix H = p.evaluate(x, {true, true}).hessian;
  Eigen::LLT<Matrix> llt(H);
  if (llt.info() != Eigen::Success) throw NumericError("build_map: Hessian at the mode is not SPD");
  return AffineMap(x, llt.matrixL());
}

TransformedPotential::TransformedPotential(std::shared_ptr<const Potential> base,
                                           std::shared_ptr<const AffineMap> map)
    : base_(std::move(base)), map_(std::move(map)) {
  if (!base_ || !map_) throw std::invalid_argument("TransformedPotential: null argument");
  if (base_->dimension() != map_->dimension()) {
    throw std::invalid_argument("TransformedPotential: dimension mismatch");
  }
}

Evaluation TransformedPotential::evaluate(const Vector& xi, EvalRequest request) {
  if (xi.size() != dimension()) throw std::invalid_argument("TransformedPotential: dimension mismatch");
  counter_.record(xi);
  Evaluation e = base_->evaluate(map_->from_whitened(xi), request);
  if (e.gradient.size() > 0) e.gradient = map_->gradient_to_whitened(e.gradient);
  if (e.hessian.size() > 0) e.hessian = map_->hessian_to_whitened(e.hessian);
  return e;
}

}  // namespace pdmp
