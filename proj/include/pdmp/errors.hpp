#pragma once

#include <stdexcept>
#include <string>

#include "pdmp/types.hpp"

namespace pdmp {

/// Numerical failure that is not a caller error (overflow, quadrature, non-SPD).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// GP hyperparameter fit could not produce a usable model.
class FitError : public NumericError {
 public:
  using NumericError::NumericError;
};

/// Optimizer stopped without meeting its tolerance. Carries the best iterate.
class OptimizationError : public NumericError {
 public:
  OptimizationError(const std::string& what, Vector best, double best_grad_norm)
      : NumericError(what), best_(std::move(best)), best_grad_norm_(best_grad_norm) {}

  const Vector& best() const noexcept { return best_; }
  double best_grad_norm() const noexcept { return best_grad_norm_; }

 private:
  Vector best_;
  double best_grad_norm_;
};

/// Iterative solver hit its cap. Carries the last residual.
class ConvergenceError : public NumericError {
 public:
  ConvergenceError(const std::string& what, double residual)
      : NumericError(what), residual_(residual) {}

  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

}  // namespace pdmp
