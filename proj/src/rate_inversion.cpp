#include "pdmp/rate_inversion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "pdmp/errors.hpp"

namespace pdmp {

namespace {

class Integrator {
 public:
  Integrator(const RateFunction& rate, double tol) : rate_(rate), tol_(tol) {}

  double operator()(double s) const {
    const double r = rate_(s);
    if (r < 0.0 || std::isnan(r)) throw std::domain_error("rate inversion: negative or NaN rate sample");
    return r;
  }

  // Adaptive Simpson on [a, b].
  double integrate(double a, double b) const {
    if (!(b > a)) return 0.0;
    const double fa = (*this)(a), fb = (*this)(b), fm = (*this)(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return refine(a, b, fa, fm, fb, whole, tol_, 0);
  }

 private:
  double refine(double a, double b, double fa, double fm, double fb, double whole, double tol, int depth) const {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = (*this)(lm), frm = (*this)(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double err = left + right - whole;
    if (depth >= 40 || std::abs(err) <= 15.0 * tol) return left + right + err / 15.0;
    return refine(a, m, fa, flm, fm, left, 0.5 * tol, depth + 1) +
           refine(m, b, fm, frm, fb, right, 0.5 * tol, depth + 1);
  }

  const RateFunction& rate_;
  double tol_;
};

// Root of F(t) = integral_lo^t rate - need on [lo, hi], with F(hi) >= 0.
double solve_in_panel(const Integrator& integ, double lo, double hi, double need, double time_tol) {
  double a = lo, b = hi;
  double t = lo;
  double partial = 0.0;  // integral lo..t
  for (int it = 0; it < 200 && b - a > time_tol; ++it) {
    const double r = integ(t);
    double next = t;
    if (r > 0.0) next = t + (need - partial) / r;
    if (!(next > a && next < b)) next = 0.5 * (a + b);
    const double step_integral = next >= t ? integ.integrate(t, next) : -integ.integrate(next, t);
    const double value = partial + step_integral;
    if (value < need) {
      a = next;
    } else {
      b = next;
    }
    const double moved = std::abs(next - t);
    t = next;
    partial = value;
    if (moved <= time_tol && r > 0.0) break;
  }
  return std::clamp(t, a, b);
}

}  // namespace

std::optional<double> invert_rate(const RateFunction& rate, double u, double horizon,
                                  const InversionOptions& options) {
  if (!(u > 0.0 && u < 1.0)) throw std::invalid_argument("invert_rate: u must lie in (0, 1)");
  if (!(horizon > 0.0)) return std::nullopt;
  const double target = -std::log(u);
  const Integrator integ(rate, options.integral_tol / options.panels);
  double cum = 0.0;
  double start = 0.0;
  for (int w = 0; w < options.max_windows; ++w) {
    const double stop = std::min(start + options.window, horizon);
    const double width = (stop - start) / options.panels;
    for (int p = 0; p < options.panels; ++p) {
      const double lo = start + p * width;
      const double hi = p + 1 == options.panels ? stop : lo + width;
      const double piece = integ.integrate(lo, hi);
      if (cum + piece >= target) return solve_in_panel(integ, lo, hi, target - cum, options.time_tol);
      cum += piece;
    }
    if (stop >= horizon) return std::nullopt;
    start = stop;
  }
  throw NumericError("invert_rate: window cap reached before the horizon");
}

std::optional<double> invert_linear_rate(double a, double b, double gamma, double target, double horizon) {
  if (!(gamma >= 0.0) || !(target >= 0.0)) throw std::invalid_argument("invert_linear_rate: bad arguments");
  // Positive root of c t + b t^2 / 2 = e, written without cancellation.
  auto quad = [](double c, double slope, double e) {
    const double disc = std::max(0.0, c * c + 2.0 * slope * e);
    return 2.0 * e / (c + std::sqrt(disc));
  };
  double tau;
  if (b > 0.0) {
    const double s0 = a < 0.0 ? -a / b : 0.0;
    if (gamma * s0 >= target) {
      tau = target / gamma;
    } else {
      const double c = std::max(a, 0.0) + gamma;
      const double e = target - gamma * s0;
      tau = s0 + (c > 0.0 || e > 0.0 ? quad(c, b, e) : 0.0);
    }
  } else if (b == 0.0 || a <= 0.0) {
    const double c = std::max(a, 0.0) + gamma;
    if (!(c > 0.0)) return std::nullopt;
    tau = target / c;
  } else {
    const double s1 = a / -b;
    const double at_s1 = 0.5 * a * s1 + gamma * s1;
    if (target <= at_s1) {
      tau = quad(a + gamma, b, target);
    } else {
      if (!(gamma > 0.0)) return std::nullopt;
      tau = s1 + (target - at_s1) / gamma;
    }
  }
  if (!(tau <= horizon)) return std::nullopt;
  return tau;
}

}  // namespace pdmp
