#include <algorithm>
#include <limits>
#include <stdexcept>

#include "pdmp/rng.hpp"
#include "pdmp_common.hpp"

namespace pdmp {

namespace {

class Bouncy {
 public:
  Bouncy(TransformedPotential& tp, Surrogate& s, const PdmpOptions& o)
      : tp_(tp), s_(s), o_(o), rng_(o.seed), log_(tp, s, result_.skeleton) {}

  PdmpResult run(const Vector& xi0) {
    const Eigen::Index d = tp_.dimension();
    if (xi0.size() != d || s_.dimension() != d) throw std::invalid_argument("bps_run: dimension mismatch");
    if (!(o_.lambda_ref > 0.0)) throw std::invalid_argument("bps_run: lambda_ref must be positive");
    if (!(o_.beta >= 0.0)) throw std::invalid_argument("bps_run: beta must be non-negative");
    xi_ = xi0;
    v_ = rng_.normal_vector(d);
    gamma_ = detail::default_offset(s_, o_);
    Skeleton& sk = result_.skeleton;
    sk.events.push_back({0.0, xi_, v_, EventKind::initial, -1});
    result_.stats.max_abs_position = xi_.cwiseAbs().maxCoeff();

    while (t_ < o_.max_time && !result_.stats.aborted) {
      if (tp_.evaluations() >= o_.max_evaluations) break;
      log_.begin();
      s_.begin_attempt();
      const double budget = -std::log(rng_.uniform());
      const double tau_ref = rng_.exponential() / o_.lambda_ref;
      const double h = detail::horizon(t_, o_);
      double tau = candidate_time(budget, std::min(h, tau_ref));

      int corrections = 0;
      bool stop = false, refresh = false, skip = false;
      double true_rate = 0.0, bound = 0.0;
      Vector proposal, grad;
      while (true) {
        if (!std::isfinite(tau)) {
          if (tau_ref <= h) {
            refresh = true;
          } else {
            const bool capped = h < o_.max_time - t_;
            advance(h, !capped);
            log_.commit(t_);
            if (capped) abort("no candidate within the ray integration horizon");
            skip = true;
          }
          break;
        }
        if (tp_.evaluations() >= o_.max_evaluations) {
          stop = true;
          break;
        }
        proposal = xi_ + v_ * tau;
        const Evaluation e = log_.evaluate(proposal);
        if (e.saturated) {
          abort("true potential overflowed at a candidate point");
          stop = true;
          break;
        }
        grad = e.gradient;
        true_rate = std::max(0.0, v_.dot(grad));
        bound = surrogate_rate(proposal) + gamma_;
        const double excess = true_rate - bound;
        if (excess <= 0.0) break;
        gamma_ += excess;
        ++result_.stats.corrections;
        if (++corrections > o_.max_corrections) {
          abort("offset correction cap exceeded");
          stop = true;
          break;
        }
        tau = candidate_time(budget, std::min(h, tau_ref));
      }
      if (stop) break;
      if (skip) continue;

      if (refresh) {
        advance(tau_ref, false);
        refresh_velocity();
        log_.commit(t_);
        continue;
      }

      advance(tau, false);
      xi_ = proposal;
      ++result_.stats.candidates;
      const double ratio = bound > 0.0 ? true_rate / bound : 1.0;
      if (true_rate > bound + 1e-12 * std::max(1.0, bound)) {
        throw std::logic_error("thinning bound violated after offset correction");
      }
      result_.stats.min_acceptance_ratio = std::min(result_.stats.min_acceptance_ratio, ratio);
      result_.stats.max_acceptance_ratio = std::max(result_.stats.max_acceptance_ratio, ratio);
      if (rng_.uniform() <= ratio) {
        ++result_.stats.accepted;
        const double gg = grad.squaredNorm();
        if (gg < 1e-28) {
          refresh_velocity();
        } else {
          v_ -= (2.0 * v_.dot(grad) / gg) * grad;
          sk.events.push_back({t_, xi_, v_, EventKind::bounce, -1});
        }
      }
      log_.commit(t_);
    }
    log_.commit(t_);
    sk.final_time = t_;
    result_.stats.evaluations = tp_.evaluations();
    return std::move(result_);
  }

 private:
  double surrogate_rate(const Vector& at) const { return std::max(0.0, v_.dot(s_.gradient(at))); }

  double candidate_time(double budget, double h) const {
    constexpr double never = std::numeric_limits<double>::infinity();
    if (!(h > 0.0)) return never;
    std::optional<double> tau;
    if (const auto slope = s_.affine_gradient_slope()) {
      tau = invert_linear_rate(v_.dot(s_.gradient(xi_)), *slope * v_.squaredNorm(), gamma_, budget, h);
    } else {
      const double g = gamma_;
      auto rate = [&](double s) { return surrogate_rate(xi_ + v_ * s) + g; };
      tau = invert_rate(rate, std::exp(-budget), h, o_.inversion);
    }
    return tau ? *tau : never;
  }

  void advance(double dt, bool to_end) {
    xi_ += v_ * dt;
    t_ = to_end ? o_.max_time : t_ + dt;
    gamma_ *= std::exp(-o_.beta * dt);
    result_.stats.max_abs_position = std::max(result_.stats.max_abs_position, xi_.cwiseAbs().maxCoeff());
  }

  void refresh_velocity() {
    v_ = rng_.normal_vector(tp_.dimension());
    ++result_.stats.refreshes;
    result_.skeleton.events.push_back({t_, xi_, v_, EventKind::refresh, -1});
  }

  void abort(const std::string& reason) {
    result_.stats.aborted = true;
    result_.stats.abort_reason = reason;
  }

  TransformedPotential& tp_;
  Surrogate& s_;
  const PdmpOptions& o_;
  Rng rng_;
  PdmpResult result_;
  detail::AttemptLog log_;
  Vector xi_, v_;
  double gamma_ = 0.0;
  double t_ = 0.0;
};

}  // namespace

PdmpResult bps_run(TransformedPotential& tp, Surrogate& surrogate, const Vector& xi0, const PdmpOptions& options) {
  return Bouncy(tp, surrogate, options).run(xi0);
}

}  // namespace pdmp
