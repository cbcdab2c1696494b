#pragma once

#include <functional>

#include "pdmp/types.hpp"

namespace pdmp {

/// Objective for minimization: returns f(x) and writes the gradient into `grad`.
/// Returning +inf marks x as infeasible; the line search backs off.
using Objective = std::function<double(const Vector& x, Vector& grad)>;

struct BfgsOptions {
  int max_iterations = 500;
  double gradient_tolerance = 1e-8;
  int max_backtracks = 60;
  double armijo = 1e-4;
  // Stop once the relative decrease of f stays below this for `stall_iterations`
  // consecutive steps. Zero disables the test.
  double function_tolerance = 0.0;
  int stall_iterations = 5;
  int max_evaluations = 100000;
};

struct BfgsResult {
  Vector x;
  double value = 0.0;
  Vector gradient;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  bool stalled = false;
};

/// Quasi-Newton minimization with a backtracking Armijo line search.
/// Stops when the Euclidean gradient norm falls below the tolerance, when f
/// stalls, or when the evaluation budget is spent.
BfgsResult minimize_bfgs(const Objective& objective, Vector x0, const BfgsOptions& options = {});

}  // namespace pdmp
