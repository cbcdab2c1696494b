#include <cmath>
#include <ostream>
#include <iomanip>
#include <stdexcept>

#include "pdmp/baselines.hpp"
#include "pdmp/rng.hpp"

namespace pdmp {

void write_chain_csv(std::ostream& out, const Chain& chain) {
  const Eigen::Index d = chain.states.cols();
  out << "iteration";
  for (Eigen::Index i = 0; i < d; ++i) out << ",xi_" << i + 1;
  out << ",accepted,n_evals_cumulative\n" << std::setprecision(17);
  for (Eigen::Index k = 0; k < chain.size(); ++k) {
    out << k + 1;
    for (Eigen::Index i = 0; i < d; ++i) out << ',' << chain.states(k, i);
    out << ',' << (chain.accepted[k] ? 1 : 0) << ',' << chain.evaluations[k] << '\n';
  }
}

RwmAdapter::RwmAdapter(Eigen::Index dim)
    : dim_(dim), cov_(Matrix::Identity(dim, dim)), factor_(Matrix::Identity(dim, dim)),
      mean_(Vector::Zero(dim)), m2_(Matrix::Zero(dim, dim)) {}

void RwmAdapter::refactor() {
  Eigen::LLT<Matrix> llt(cov_);
  if (llt.info() != Eigen::Success) {
    cov_.diagonal().array() += 1e-8;
    llt.compute(cov_);
  }
  factor_ = llt.matrixL();
}

void RwmAdapter::update(std::uint64_t iteration, bool accepted, const Vector& state) {
  if (iteration > kFreeze) return;
  if (accepted) ++window_accepts_;
  if (iteration <= kSwitch) {
    ++n_;
    const Vector delta = state - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (state - mean_).transpose();
  }
  if (iteration % kWindow != 0) return;
  const double rate = static_cast<double>(window_accepts_) / static_cast<double>(kWindow);
  window_accepts_ = 0;
  if (iteration == kSwitch) {
    Matrix emp = m2_ / static_cast<double>(std::max<std::uint64_t>(n_ - 1, 1));
    cov_ = 0.5 * (emp + emp.transpose()) * (2.38 * 2.38 / static_cast<double>(dim_));
    refactor();
    return;
  }
  if (rate < 0.2) {
    cov_ *= 0.9;
    factor_ *= std::sqrt(0.9);
  } else if (rate > 0.25) {
    cov_ *= 1.1;
    factor_ *= std::sqrt(1.1);
  }
}

Chain rwm_run(TransformedPotential& tp, const Vector& xi0, const RwmOptions& options) {
  const Eigen::Index d = tp.dimension();
  if (xi0.size() != d) throw std::invalid_argument("rwm_run: dimension mismatch");
  Rng rng(options.seed);
  RwmAdapter adapter(d);
  Vector x = xi0;
  Evaluation cur = tp.evaluate(x, {false, false});

  std::vector<Vector> states;
  Chain chain;
  states.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(options.iterations, 1u << 22)));
  for (std::uint64_t it = 1; it <= options.iterations; ++it) {
    if (tp.evaluations() >= options.max_evaluations) break;
    const Vector y = x + adapter.factor() * rng.normal_vector(d);
    const Evaluation prop = tp.evaluate(y, {false, false});
    const double log_ratio = cur.value - prop.value;
    const bool accept = !prop.saturated && std::log(rng.uniform()) < log_ratio;
    if (accept) {
      x = y;
      cur = prop;
    }
    adapter.update(it, accept, x);
    states.push_back(x);
    chain.accepted.push_back(accept);
    chain.evaluations.push_back(tp.evaluations());
  }
  chain.states.resize(static_cast<Eigen::Index>(states.size()), d);
  for (std::size_t k = 0; k < states.size(); ++k) chain.states.row(static_cast<Eigen::Index>(k)) = states[k].transpose();
  return chain;
}

}  // namespace pdmp
