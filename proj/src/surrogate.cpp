#include "pdmp/surrogate.hpp"

#include <cmath>
#include <iostream>
#include <stdexcept>

#include "pdmp/errors.hpp"

namespace pdmp {

std::string to_string(SurrogateKind kind) {
  switch (kind) {
    case SurrogateKind::constant: return "constant";
    case SurrogateKind::random_gradient: return "random_gradient";
    case SurrogateKind::laplace: return "laplace";
    case SurrogateKind::gp: return "gp";
    case SurrogateKind::grad_gp: return "grad_gp";
    case SurrogateKind::adaptive_gp: return "adaptive_gp";
  }
  return "unknown";
}

SurrogateKind parse_surrogate_kind(const std::string& name) {
  for (auto k : {SurrogateKind::constant, SurrogateKind::random_gradient, SurrogateKind::laplace,
                 SurrogateKind::gp, SurrogateKind::grad_gp, SurrogateKind::adaptive_gp}) {
    if (to_string(k) == name) return k;
  }
  if (name == "random") return SurrogateKind::random_gradient;
  throw std::invalid_argument("unknown surrogate kind: " + name);
}

Surrogate Surrogate::constant(Eigen::Index dim) { return Surrogate(SurrogateKind::constant, dim); }

Surrogate Surrogate::random_gradient(Eigen::Index dim, std::uint64_t seed) {
  Surrogate s(SurrogateKind::random_gradient, dim);
  s.rng_.emplace(seed);
  s.random_grad_ = Vector::Zero(dim);
  s.begin_attempt();
  return s;
}

Surrogate Surrogate::laplace(TransformedPotential& tp) {
  Surrogate s(SurrogateKind::laplace, tp.dimension());
  s.c_ = tp.evaluate(Vector::Zero(tp.dimension()), {false, false}).value;
  return s;
}

namespace {

gp::Hyperparams initial_hyperparams(const gp::Dataset& data) {
  gp::Hyperparams h = gp::Hyperparams::defaults(data.dimension());
  double mean = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) mean += data.value(i);
  mean /= static_cast<double>(data.size());
  double var = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) var += (data.value(i) - mean) * (data.value(i) - mean);
  var /= static_cast<double>(data.size());
  h.mean_const = mean;
  h.signal_var = std::max(var, 1e-6);
  h.noise_var = 1e-6 * h.signal_var;
  return h;
}

}  // namespace

Surrogate Surrogate::gaussian_process(TransformedPotential& tp, SurrogateKind kind, int n0, std::uint64_t seed,
                                      const gp::FitOptions& fit) {
  if (kind != SurrogateKind::gp && kind != SurrogateKind::grad_gp && kind != SurrogateKind::adaptive_gp) {
    throw std::invalid_argument("Surrogate::gaussian_process: not a GP kind");
  }
  if (n0 < 1) throw std::invalid_argument("Surrogate::gaussian_process: n0 must be >= 1");
  const Eigen::Index d = tp.dimension();
  Surrogate s = laplace(tp);
  s.kind_ = kind;
  const bool with_gradients = kind == SurrogateKind::grad_gp;
  gp::Dataset data(d, with_gradients);
  Rng rng(seed);
  while (data.size() < static_cast<std::size_t>(n0)) {
    const Vector xi = rng.normal_vector(d);
    if (data.contains(xi)) continue;
    const Evaluation e = tp.evaluate(xi, {with_gradients, false});
    if (e.saturated) throw NumericError("Surrogate: true potential saturated at a training point");
    const double resid = e.value - 0.5 * xi.squaredNorm() - s.c_;
    data.add(xi, resid, with_gradients ? Vector(e.gradient - xi) : Vector());
  }
  gp::FitOptions options = fit;
  options.seed = derive_seed(seed, 0x6770);
  s.model_ = std::make_shared<gp::Model>(gp::fit(data, initial_hyperparams(data), with_gradients, options));

  if (kind == SurrogateKind::adaptive_gp) {
    for (int n = 1; n <= 5; ++n) {
      const std::size_t m = std::min<std::size_t>(static_cast<std::size_t>(n0) << n, kHardCap);
      if (m > static_cast<std::size_t>(n0) && (s.milestones_.empty() || m > s.milestones_.back())) {
        s.milestones_.push_back(m);
      }
    }
    s.refit_options_ = fit;
    s.refit_options_.restarts = 0;
  }
  return s;
}

double Surrogate::value(const Vector& xi) const {
  switch (kind_) {
    case SurrogateKind::constant: return c_;
    case SurrogateKind::random_gradient: return c_ + random_grad_.dot(xi);
    case SurrogateKind::laplace: return 0.5 * xi.squaredNorm() + c_;
    default: return 0.5 * xi.squaredNorm() + c_ + model_->predict_mean(xi);
  }
}

Vector Surrogate::gradient(const Vector& xi) const {
  switch (kind_) {
    case SurrogateKind::constant: return Vector::Zero(dim_);
    case SurrogateKind::random_gradient: return random_grad_;
    case SurrogateKind::laplace: return xi;
    default: return xi + model_->predict_mean_grad(xi);
  }
}

std::optional<double> Surrogate::affine_gradient_slope() const {
  switch (kind_) {
    case SurrogateKind::constant:
    case SurrogateKind::random_gradient: return 0.0;
    case SurrogateKind::laplace: return 1.0;
    default: return std::nullopt;
  }
}

void Surrogate::begin_attempt() {
  if (kind_ != SurrogateKind::random_gradient) return;
  for (Eigen::Index i = 0; i < dim_; ++i) random_grad_[i] = rng_->uniform(-0.5, 0.5);
}

void Surrogate::observe(const Vector& xi, double value) {
  if (kind_ != SurrogateKind::adaptive_gp || next_milestone_ >= milestones_.size()) return;
  if (!std::isfinite(value) || model_->dataset().contains(xi)) return;
  for (const auto& pending : pending_) {
    if ((pending.first - xi).cwiseAbs().maxCoeff() <= 1e-12) return;
  }
  pending_.emplace_back(xi, value - 0.5 * xi.squaredNorm() - c_);
  const std::size_t target = milestones_[next_milestone_];
  if (trained_size() + pending_.size() >= target) refit_to(target);
}

void Surrogate::refit_to(std::size_t target) {
  gp::Dataset data = model_->dataset();
  for (const auto& [x, r] : pending_) {
    if (data.size() >= target) break;
    data.add(x, r);
  }
  pending_.clear();
  ++next_milestone_;
  try {
    auto fitted = gp::fit(data, model_->hyperparams(), false, refit_options_);
    model_ = std::make_shared<gp::Model>(std::move(fitted));
    ++refits_;
  } catch (const NumericError& e) {
    ++refit_failures_;
    std::clog << "warning: adaptive GP refit at " << target << " points failed (" << e.what()
              << "); keeping previous model\n";
  }
}

}  // namespace pdmp
