#include <algorithm>
#include <limits>
#include <stdexcept>

#include "pdmp/rng.hpp"
#include "pdmp_common.hpp"

namespace pdmp {

namespace {

constexpr double kNever = std::numeric_limits<double>::infinity();

class ZigZag {
 public:
  ZigZag(TransformedPotential& tp, Surrogate& s, const PdmpOptions& o)
      : tp_(tp), s_(s), o_(o), rng_(o.seed), log_(tp, s, result_.skeleton) {}

  PdmpResult run(const Vector& xi0) {
    const Eigen::Index d = tp_.dimension();
    if (xi0.size() != d || s_.dimension() != d) throw std::invalid_argument("zigzag_run: dimension mismatch");
    if (!(o_.beta >= 0.0)) throw std::invalid_argument("zigzag_run: beta must be non-negative");
    xi_ = xi0;
    v_.resize(d);
    for (Eigen::Index i = 0; i < d; ++i) v_[i] = rng_.uniform() < 0.5 ? -1.0 : 1.0;
    gamma_ = Vector::Constant(d, detail::default_offset(s_, o_));
    Skeleton& sk = result_.skeleton;
    sk.events.push_back({0.0, xi_, v_, EventKind::initial, -1});
    result_.stats.max_abs_position = xi_.cwiseAbs().maxCoeff();

    std::vector<double> budget(d), tau(d);
    while (t_ < o_.max_time && !result_.stats.aborted) {
      if (tp_.evaluations() >= o_.max_evaluations) break;
      log_.begin();
      s_.begin_attempt();
      const double h = detail::horizon(t_, o_);
      for (Eigen::Index i = 0; i < d; ++i) {
        budget[i] = -std::log(rng_.uniform());
        tau[i] = candidate_time(i, budget[i], h);
      }
      int corrections = 0;
      bool stop = false, skip = false;
      Eigen::Index winner = -1;
      double true_rate = 0.0, bound = 0.0;
      Vector proposal;
      while (true) {
        winner = std::min_element(tau.begin(), tau.end()) - tau.begin();
        if (tau[winner] == kNever) {
          const bool capped = h < o_.max_time - t_;
          advance_without_event(h);
          if (capped) abort("no candidate within the ray integration horizon");
          skip = true;
          break;
        }
        if (tp_.evaluations() >= o_.max_evaluations) {
          stop = true;
          break;
        }
        proposal = xi_ + v_ * tau[winner];
        const Evaluation e = log_.evaluate(proposal);
        if (e.saturated) {
          abort("true potential overflowed at a candidate point");
          stop = true;
          break;
        }
        true_rate = std::max(0.0, v_[winner] * e.gradient[winner]);
        bound = surrogate_rate(proposal, winner) + gamma_[winner];
        const double excess = true_rate - bound;
        if (excess <= 0.0) break;
        gamma_[winner] += excess;
        ++result_.stats.corrections;
        if (++corrections > o_.max_corrections) {
          abort("offset correction cap exceeded");
          stop = true;
          break;
        }
        tau[winner] = candidate_time(winner, budget[winner], h);
      }
      if (stop) break;
      if (skip) continue;

      const double dt = tau[winner];
      t_ += dt;
      xi_ = proposal;
      ++result_.stats.candidates;
      const double ratio = bound > 0.0 ? true_rate / bound : 1.0;
      if (true_rate > bound + 1e-12 * std::max(1.0, bound)) {
        throw std::logic_error("thinning bound violated after offset correction");
      }
      result_.stats.min_acceptance_ratio = std::min(result_.stats.min_acceptance_ratio, ratio);
      result_.stats.max_acceptance_ratio = std::max(result_.stats.max_acceptance_ratio, ratio);
      gamma_ *= std::exp(-o_.beta * dt);
      if (rng_.uniform() <= ratio) {
        v_[winner] = -v_[winner];
        ++result_.stats.accepted;
        sk.events.push_back({t_, xi_, v_, EventKind::flip, static_cast<int>(winner)});
      }
      track_position();
      log_.commit(t_);
    }
    log_.commit(t_);
    sk.final_time = t_;
    result_.stats.evaluations = tp_.evaluations();
    return std::move(result_);
  }

 private:
  double surrogate_rate(const Vector& at, Eigen::Index i) const {
    return std::max(0.0, v_[i] * s_.gradient(at)[i]);
  }

  double candidate_time(Eigen::Index i, double budget, double h) const {
    if (!(h > 0.0)) return kNever;
    std::optional<double> tau;
    if (const auto slope = s_.affine_gradient_slope()) {
      const double a = v_[i] * s_.gradient(xi_)[i];
      tau = invert_linear_rate(a, *slope * v_[i] * v_[i], gamma_[i], budget, h);
    } else {
      const double g = gamma_[i];
      auto rate = [&](double s) { return surrogate_rate(xi_ + v_ * s, i) + g; };
      tau = invert_rate(rate, std::exp(-budget), h, o_.inversion);
    }
    return tau ? *tau : kNever;
  }

  // No candidate within the horizon: move to its end and start a new attempt there.
  void advance_without_event(double h) {
    xi_ += v_ * h;
    t_ = h == o_.max_time - t_ ? o_.max_time : t_ + h;
    gamma_ *= std::exp(-o_.beta * h);
    track_position();
    log_.commit(t_);
  }

  void track_position() {
    result_.stats.max_abs_position = std::max(result_.stats.max_abs_position, xi_.cwiseAbs().maxCoeff());
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
  Vector xi_, v_, gamma_;
  double t_ = 0.0;
};

}  // namespace

PdmpResult zigzag_run(TransformedPotential& tp, Surrogate& surrogate, const Vector& xi0,
                      const PdmpOptions& options) {
  return ZigZag(tp, surrogate, options).run(xi0);
}

}  // namespace pdmp
