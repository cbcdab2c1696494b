#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>

#include "pdmp/types.hpp"

namespace pdmp {

struct EvalRequest {
  bool gradient = true;
  bool hessian = false;
};

/// Result of one model query. When the computation overflows, `value` is set to the
/// largest finite double, non-finite gradient entries are zeroed and `saturated` is set.
struct Evaluation {
  double value = 0.0;
  Vector gradient;
  Matrix hessian;
  bool saturated = false;
};

/// Negative log of an unnormalized density. Implementations are pure and thread-safe.
class Potential {
 public:
  virtual ~Potential() = default;
  virtual Eigen::Index dimension() const = 0;
  virtual Evaluation evaluate(const Vector& x, EvalRequest request = {}) const = 0;

  double value(const Vector& x) const { return evaluate(x, {false, false}).value; }
  Vector gradient(const Vector& x) const { return evaluate(x).gradient; }
  Matrix hessian(const Vector& x) const { return evaluate(x, {true, true}).hessian; }
};

/// 1/2 (x - mean)^T P (x - mean) with precision P.
class GaussianPotential final : public Potential {
 public:
  GaussianPotential(Vector mean, Matrix precision);
  /// Standard normal in `dim` dimensions.
  static std::shared_ptr<GaussianPotential> standard(Eigen::Index dim);

  Eigen::Index dimension() const override { return mean_.size(); }
  Evaluation evaluate(const Vector& x, EvalRequest request = {}) const override;

  const Vector& mean() const { return mean_; }
  const Matrix& precision() const { return precision_; }

 private:
  Vector mean_;
  Matrix precision_;
};

/// Counts model evaluations. Consecutive queries at the same point count once, so a
/// value request followed by a gradient request at that point is a single evaluation.
class EvalCounter {
 public:
  /// Registers a query at `x`; returns true if it was counted.
  bool record(const Vector& x);
  std::uint64_t count() const { return count_.load(std::memory_order_relaxed); }

 private:
  std::mutex mutex_;
  Vector last_;
  std::atomic<std::uint64_t> count_{0};
};

/// Replaces non-finite parts of an evaluation with saturated values.
void sanitize(Evaluation& e);

/// A potential plus its own evaluation counter.
class CountingPotential {
 public:
  explicit CountingPotential(std::shared_ptr<const Potential> base);

  Eigen::Index dimension() const { return base_->dimension(); }
  Evaluation evaluate(const Vector& x, EvalRequest request = {});
  std::uint64_t evaluations() const { return counter_.count(); }
  const Potential& base() const { return *base_; }

 private:
  std::shared_ptr<const Potential> base_;
  EvalCounter counter_;
};

}  // namespace pdmp
