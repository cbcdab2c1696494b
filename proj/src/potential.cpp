#include "pdmp/potential.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace pdmp {

GaussianPotential::GaussianPotential(Vector mean, Matrix precision)
    : mean_(std::move(mean)), precision_(std::move(precision)) {
  if (precision_.rows() != mean_.size() || precision_.cols() != mean_.size()) {
    throw std::invalid_argument("GaussianPotential: precision shape mismatch");
  }
}

std::shared_ptr<GaussianPotential> GaussianPotential::standard(Eigen::Index dim) {
  return std::make_shared<GaussianPotential>(Vector::Zero(dim), Matrix::Identity(dim, dim));
}

Evaluation GaussianPotential::evaluate(const Vector& x, EvalRequest request) const {
  if (x.size() != mean_.size()) throw std::invalid_argument("GaussianPotential: dimension mismatch");
  const Vector r = x - mean_;
  const Vector pr = precision_ * r;
  Evaluation e;
  e.value = 0.5 * r.dot(pr);
  if (request.gradient || request.hessian) e.gradient = pr;
  if (request.hessian) e.hessian = precision_;
  return e;
}

bool EvalCounter::record(const Vector& x) {
  std::lock_guard<std::mutex> lock(mutex_);
  if (last_.size() == x.size() && last_ == x) return false;
  last_ = x;
  count_.fetch_add(1, std::memory_order_relaxed);
  return true;
}

void sanitize(Evaluation& e) {
  constexpr double big = std::numeric_limits<double>::max();
  if (!std::isfinite(e.value)) {
    e.value = big;
    e.saturated = true;
  }
  for (Eigen::Index i = 0; i < e.gradient.size(); ++i) {
    if (!std::isfinite(e.gradient[i])) {
      e.gradient[i] = 0.0;
      e.saturated = true;
    }
  }
  if (e.hessian.size() > 0 && !e.hessian.allFinite()) {
    e.hessian = e.hessian.unaryExpr([](double v) { return std::isfinite(v) ? v : 0.0; });
    e.saturated = true;
  }
}

CountingPotential::CountingPotential(std::shared_ptr<const Potential> base) : base_(std::move(base)) {
  if (!base_) throw std::invalid_argument("CountingPotential: null base");
}

Evaluation CountingPotential::evaluate(const Vector& x, EvalRequest request) {
  counter_.record(x);
  return base_->evaluate(x, request);
}

}  // namespace pdmp
