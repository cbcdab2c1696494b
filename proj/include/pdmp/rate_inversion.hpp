#pragma once

#include <functional>
#include <optional>

namespace pdmp {

/// Non-negative rate along a ray, as a function of the elapsed time s >= 0.
using RateFunction = std::function<double(double)>;

struct InversionOptions {
  double window = 10.0;
  int max_windows = 10000;
  /// Panels per window; each panel is integrated by adaptive Simpson.
  int panels = 8;
  double integral_tol = 1e-10;
  double time_tol = 1e-10;
};

/// Smallest tau with integral_0^tau rate(s) ds = -log(u), or empty when the integral over
/// [0, horizon] falls short. Throws std::domain_error if a negative rate is sampled and
/// NumericError if the window cap is hit before the horizon.
std::optional<double> invert_rate(const RateFunction& rate, double u, double horizon,
                                  const InversionOptions& options = {});

/// Same as invert_rate for a rate gamma + max(0, a + b s) with gamma >= 0, solved in
/// closed form. `target` is the exponential budget -log(u).
std::optional<double> invert_linear_rate(double a, double b, double gamma, double target, double horizon);

}  // namespace pdmp
