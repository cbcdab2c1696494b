#include "pdmp/optimize.hpp"

#include <cmath>
#include <limits>

namespace pdmp {

BfgsResult minimize_bfgs(const Objective& objective, Vector x0, const BfgsOptions& options) {
  const Eigen::Index n = x0.size();
  BfgsResult result;
  result.x = std::move(x0);
  result.gradient = Vector::Zero(n);
  result.value = objective(result.x, result.gradient);
  result.evaluations = 1;
  if (!std::isfinite(result.value)) {
    return result;
  }

  Matrix inv_hessian = Matrix::Identity(n, n);
  bool scaled = false;
  Vector grad_new(n);
  int stall = 0;

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    const double gnorm = result.gradient.norm();
    if (gnorm < options.gradient_tolerance) {
      result.converged = true;
      return result;
    }

    Vector direction = -inv_hessian * result.gradient;
    double slope = result.gradient.dot(direction);
    if (!(slope < 0.0)) {
      inv_hessian.setIdentity();
      direction = -result.gradient;
      slope = -gnorm * gnorm;
    }

    double step = 1.0;
    bool accepted = false;
    Vector x_new(n);
    double f_new = 0.0;
    for (int bt = 0; bt < options.max_backtracks; ++bt) {
      if (result.evaluations >= options.max_evaluations) {
        break;
      }
      x_new = result.x + step * direction;
      f_new = objective(x_new, grad_new);
      ++result.evaluations;
      if (std::isfinite(f_new)) {
        const bool armijo = f_new <= result.value + options.armijo * step * slope;
        // Near the optimum f differences drown in round-off; accept a step that
        // keeps f flat and shrinks the gradient.
        const bool flat = f_new <= result.value + 1e-12 * std::abs(result.value) &&
                          grad_new.norm() < gnorm;
        if (armijo || flat) {
          accepted = true;
          break;
        }
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (result.evaluations >= options.max_evaluations) {
        result.iterations = iter;
        return result;
      }
      if (scaled || !inv_hessian.isIdentity()) {
        inv_hessian.setIdentity();
        scaled = false;
        continue;
      }
      result.iterations = iter;
      return result;
    }

    const Vector s = x_new - result.x;
    const Vector y = grad_new - result.gradient;
    const double sy = s.dot(y);
    if (sy > 1e-14 * s.norm() * y.norm()) {
      if (!scaled) {
        inv_hessian = Matrix::Identity(n, n) * (sy / y.squaredNorm());
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Vector hy = inv_hessian * y;
      inv_hessian += (rho * rho * y.dot(hy) + rho) * (s * s.transpose()) -
                     rho * (hy * s.transpose() + s * hy.transpose());
    }

    const double decrease = result.value - f_new;
    result.x = x_new;
    result.value = f_new;
    result.gradient = grad_new;
    result.iterations = iter + 1;
    if (options.function_tolerance > 0.0) {
      stall = decrease <= options.function_tolerance * (1.0 + std::abs(f_new)) ? stall + 1 : 0;
      if (stall >= options.stall_iterations) {
        result.stalled = true;
        break;
      }
    }
  }
  result.converged = result.gradient.norm() < options.gradient_tolerance;
  return result;
}

}  // namespace pdmp
