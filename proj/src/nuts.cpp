#include <cmath>
#include <limits>
#include <stdexcept>

#include "pdmp/baselines.hpp"
#include "pdmp/rng.hpp"

namespace pdmp {

PhasePoint leapfrog(TransformedPotential& tp, const PhasePoint& z, double eps) {
  PhasePoint out;
  const Vector p_half = z.p - 0.5 * eps * z.grad;
  out.q = z.q + eps * p_half;
  const Evaluation e = tp.evaluate(out.q);
  out.potential = e.saturated ? std::numeric_limits<double>::infinity() : e.value;
  out.grad = e.gradient;
  out.p = p_half - 0.5 * eps * out.grad;
  return out;
}

namespace {

double hamiltonian(const PhasePoint& z) { return z.potential + 0.5 * z.p.squaredNorm(); }

struct Tree {
  PhasePoint minus, plus, proposal;
  std::uint64_t n = 0;
  bool ok = true;
  double alpha = 0.0;
  std::uint64_t n_alpha = 0;
};

class Nuts {
 public:
  Nuts(TransformedPotential& tp, const NutsOptions& o) : tp_(tp), o_(o), rng_(o.seed) {}

  Chain run(const Vector& xi0, NutsDiagnostics* diag) {
    const Eigen::Index d = tp_.dimension();
    if (xi0.size() != d) throw std::invalid_argument("nuts_run: dimension mismatch");
    PhasePoint z;
    z.q = xi0;
    const Evaluation e = tp_.evaluate(z.q);
    z.potential = e.value;
    z.grad = e.gradient;

    double eps = o_.step_size > 0.0 ? o_.step_size : find_reasonable_step(z);
    const bool adapt = !(o_.step_size > 0.0);
    const double mu = std::log(10.0 * eps);
    double log_eps_bar = 0.0, h_bar = 0.0;
    double accept_sum = 0.0;
    std::uint64_t accept_count = 0;

    std::vector<Vector> states;
    Chain chain;
    for (std::uint64_t m = 1; m <= o_.iterations && !exhausted(); ++m) {
      z.p = rng_.normal_vector(d);
      const double h0 = hamiltonian(z);
      log_u_ = -h0 - rng_.exponential();
      h0_ = h0;
      Tree t{z, z, z, 1, true, 0.0, 0};
      int depth = 0;
      PhasePoint next = z;
      while (t.ok && depth < o_.max_depth) {
        const int dir = rng_.uniform() < 0.5 ? -1 : 1;
        Tree sub = dir < 0 ? build(t.minus, dir, depth, eps) : build(t.plus, dir, depth, eps);
        if (dir < 0) {
          t.minus = sub.minus;
        } else {
          t.plus = sub.plus;
        }
        t.alpha += sub.alpha;
        t.n_alpha += sub.n_alpha;
        if (sub.ok && rng_.uniform() < static_cast<double>(sub.n) / static_cast<double>(t.n)) next = sub.proposal;
        t.n += sub.n;
        t.ok = sub.ok && no_u_turn(t.minus, t.plus);
        ++depth;
      }
      const bool moved = next.q != z.q;
      z = next;
      const double stat = t.n_alpha > 0 ? t.alpha / static_cast<double>(t.n_alpha) : 0.0;
      if (adapt && m <= o_.adapt_iterations) {
        const double md = static_cast<double>(m);
        const double w = 1.0 / (md + o_.t0);
        h_bar = (1.0 - w) * h_bar + w * (o_.target_accept - stat);
        const double log_eps = mu - std::sqrt(md) / o_.gamma * h_bar;
        const double mk = std::pow(md, -o_.kappa);
        log_eps_bar = mk * log_eps + (1.0 - mk) * log_eps_bar;
        eps = std::exp(log_eps);
        if (m == o_.adapt_iterations) eps = std::exp(log_eps_bar);
      } else {
        accept_sum += stat;
        ++accept_count;
      }
      if (diag) diag->tree_depths.push_back(depth);
      states.push_back(z.q);
      chain.accepted.push_back(moved);
      chain.evaluations.push_back(tp_.evaluations());
    }
    chain.states.resize(static_cast<Eigen::Index>(states.size()), d);
    for (std::size_t k = 0; k < states.size(); ++k) chain.states.row(static_cast<Eigen::Index>(k)) = states[k].transpose();
    if (diag) {
      diag->final_step_size = eps;
      diag->divergences = divergences_;
      diag->mean_accept_stat = accept_count > 0 ? accept_sum / static_cast<double>(accept_count) : 0.0;
    }
    return chain;
  }

 private:
  bool exhausted() const { return tp_.evaluations() >= o_.max_evaluations; }

  static bool no_u_turn(const PhasePoint& minus, const PhasePoint& plus) {
    const Vector span = plus.q - minus.q;
    return span.dot(minus.p) >= 0.0 && span.dot(plus.p) >= 0.0;
  }

  Tree build(const PhasePoint& z, int dir, int depth, double eps) {
    if (depth == 0) {
      Tree t;
      if (exhausted()) {
        t.minus = t.plus = t.proposal = z;
        t.n = 0;
        t.ok = false;
        return t;
      }
      PhasePoint next = leapfrog(tp_, z, dir * eps);
      const double h = hamiltonian(next);
      const bool finite = std::isfinite(h);
      t.n = finite && log_u_ <= -h ? 1 : 0;
      t.ok = finite && log_u_ < o_.max_energy_error - h;
      if (!t.ok) ++divergences_;
      t.alpha = finite ? std::min(1.0, std::exp(h0_ - h)) : 0.0;
      t.n_alpha = 1;
      t.minus = t.plus = t.proposal = std::move(next);
      return t;
    }
    Tree t = build(z, dir, depth - 1, eps);
    if (!t.ok) return t;
    Tree other = build(dir < 0 ? t.minus : t.plus, dir, depth - 1, eps);
    if (dir < 0) {
      t.minus = other.minus;
    } else {
      t.plus = other.plus;
    }
    const std::uint64_t total = t.n + other.n;
    if (total > 0 && rng_.uniform() < static_cast<double>(other.n) / static_cast<double>(total)) {
      t.proposal = other.proposal;
    }
    t.alpha += other.alpha;
    t.n_alpha += other.n_alpha;
    t.ok = other.ok && no_u_turn(t.minus, t.plus);
    t.n = total;
    return t;
  }

  double find_reasonable_step(const PhasePoint& z0) {
    double eps = 1.0;
    PhasePoint z = z0;
    z.p = rng_.normal_vector(z0.q.size());
    const double h0 = hamiltonian(z);
    auto log_ratio = [&](double step) {
      const double h = hamiltonian(leapfrog(tp_, z, step));
      return std::isfinite(h) ? h0 - h : -std::numeric_limits<double>::infinity();
    };
    double lr = log_ratio(eps);
    const double a = lr > std::log(0.5) ? 1.0 : -1.0;
    for (int it = 0; it < 100 && a * lr > -a * std::log(2.0); ++it) {
      if (exhausted()) break;
      eps *= std::pow(2.0, a);
      lr = log_ratio(eps);
    }
    return eps;
  }

  TransformedPotential& tp_;
  const NutsOptions& o_;
  Rng rng_;
  double log_u_ = 0.0;
  double h0_ = 0.0;
  std::uint64_t divergences_ = 0;
};

}  // namespace

Chain nuts_run(TransformedPotential& tp, const Vector& xi0, const NutsOptions& options, NutsDiagnostics* diagnostics) {
  return Nuts(tp, options).run(xi0, diagnostics);
}

}  // namespace pdmp
