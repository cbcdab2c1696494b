#include "pdmp/bar_problem.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "json.hpp"
#include "pdmp/errors.hpp"
#include "pdmp/rng.hpp"

namespace pdmp {

namespace {

// Second antiderivative of exp(-t^2 / (2 l^2)), up to an affine term.
double se_antiderivative2(double t, double l) {
  const double z = t / (std::numbers::sqrt2 * l);
  return l * std::sqrt(std::numbers::pi / 2.0) * t * std::erf(z) + l * l * std::expm1(-z * z);
}

double cell_overlap(double x, Eigen::Index i, Eigen::Index d) {
  const double h = 1.0 / static_cast<double>(d);
  return std::clamp(x - static_cast<double>(i) * h, 0.0, h);
}

}  // namespace

void PriorSpec::validate() const {
  if (!(signal_std > 0.0) || !(length_scale > 0.0) || dimension < 1) {
    throw std::invalid_argument("PriorSpec: need signal_std > 0, length_scale > 0, d >= 1");
  }
}

ProjectedPrior project_prior(const PriorSpec& spec) {
  spec.validate();
  const Eigen::Index d = spec.dimension;
  const double h = 1.0 / static_cast<double>(d);
  const double l = spec.length_scale;
  const double scale = static_cast<double>(d * d) * spec.signal_std * spec.signal_std;
  ProjectedPrior p;
  p.mean = Vector::Constant(d, spec.mean_field);
  p.covariance.resize(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double ai = i * h, bi = (i + 1) * h, aj = j * h, bj = (j + 1) * h;
      const double v = se_antiderivative2(bi - aj, l) + se_antiderivative2(ai - bj, l) -
                       se_antiderivative2(bi - bj, l) - se_antiderivative2(ai - aj, l);
      p.covariance(i, j) = p.covariance(j, i) = scale * v;
    }
  }
  Eigen::LLT<Matrix> llt(p.covariance);
  if (llt.info() != Eigen::Success) throw NumericError("project_prior: covariance not SPD");
  p.chol = llt.matrixL();
  p.precision = llt.solve(Matrix::Identity(d, d));
  p.precision = 0.5 * (p.precision + p.precision.transpose()).eval();
  return p;
}

double forward_displacement(const Vector& theta, double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("forward_displacement: x outside [0, 1]");
  const Eigen::Index d = theta.size();
  double u = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    const double c = cell_overlap(x, i, d);
    if (c > 0.0) u += c * std::exp(-theta[i]);
  }
  return u;
}

Vector forward_sensitivity(const Vector& theta, double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("forward_sensitivity: x outside [0, 1]");
  const Eigen::Index d = theta.size();
  Vector s(d);
  for (Eigen::Index i = 0; i < d; ++i) s[i] = -cell_overlap(x, i, d) * std::exp(-theta[i]);
  return s;
}

BarPotential::BarPotential(ProjectedPrior prior, Observations obs)
    : prior_(std::move(prior)), obs_(std::move(obs)) {
  const Eigen::Index d = prior_.mean.size();
  if (d < 1 || prior_.precision.rows() != d) throw std::invalid_argument("BarPotential: bad prior");
  if (obs_.values.size() != obs_.sensor_locations.size()) {
    throw std::invalid_argument("BarPotential: sensor/value count mismatch");
  }
  if (obs_.size() > 0 && !(obs_.noise_std > 0.0)) {
    throw std::invalid_argument("BarPotential: noise_std must be positive");
  }
  overlap_.resize(obs_.size(), d);
  for (Eigen::Index k = 0; k < obs_.size(); ++k) {
    const double x = obs_.sensor_locations[k];
    if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("BarPotential: sensor outside [0, 1]");
    for (Eigen::Index i = 0; i < d; ++i) overlap_(k, i) = cell_overlap(x, i, d);
  }
}

Evaluation BarPotential::evaluate(const Vector& theta, EvalRequest request) const {
  const Eigen::Index d = dimension();
  if (theta.size() != d) throw std::invalid_argument("BarPotential: dimension mismatch");
  const Vector dev = theta - prior_.mean;
  const Vector compliance = (-theta.array()).exp();
  const Vector u = overlap_ * compliance;
  const Vector r = u - obs_.values;  // model minus data
  const double w = obs_.size() > 0 ? 1.0 / (obs_.noise_std * obs_.noise_std) : 0.0;

  Evaluation e;
  // The whitened residual is far better conditioned than dev' P dev once the prior is stiff.
  const Vector white = prior_.chol.triangularView<Eigen::Lower>().solve(dev);
  const Vector pdev = prior_.chol.transpose().triangularView<Eigen::Upper>().solve(white);
  e.value = 0.5 * w * r.squaredNorm() + 0.5 * white.squaredNorm();
  if (request.gradient || request.hessian) {
    // J(k, i) = -overlap(k, i) exp(-theta_i)
    const Matrix J = -(overlap_ * compliance.asDiagonal());
    e.gradient = w * J.transpose() * r + pdev;
    if (request.hessian) {
      // second derivative of u_k is diagonal: overlap(k, i) exp(-theta_i)
      const Vector curvature = (overlap_.transpose() * r).cwiseProduct(compliance);
      Matrix H = J.transpose() * J;
      H.diagonal() += curvature;
      e.hessian = w * H + prior_.precision;
      e.hessian = 0.5 * (e.hessian + e.hessian.transpose()).eval();
    }
  }
  sanitize(e);
  return e;
}

Eigen::Index sensor_count(Eigen::Index d) { return (3 * d) / 4; }

Vector sensor_locations(Eigen::Index m) {
  Vector x(m);
  for (Eigen::Index i = 0; i < m; ++i) x[i] = static_cast<double>(i + 1) / static_cast<double>(m + 1);
  return x;
}

SyntheticProblem generate_synthetic(const PriorSpec& spec, std::uint64_t seed, double noise_std) {
  const ProjectedPrior prior = project_prior(spec);
  Rng rng(seed);
  SyntheticProblem p;
  p.d = spec.dimension;
  p.seed = seed;
  p.theta_star = prior.mean + prior.chol * rng.normal_vector(spec.dimension);
  const Eigen::Index m = sensor_count(spec.dimension);
  p.observations.sensor_locations = sensor_locations(m);
  p.observations.noise_std = noise_std;
  p.observations.values.resize(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    p.observations.values[k] =
        forward_displacement(p.theta_star, p.observations.sensor_locations[k]) + noise_std * rng.normal();
  }
  return p;
}

namespace {

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Vector from_std(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

std::string synthetic_to_json(const SyntheticProblem& p) {
  nlohmann::json j;
  j["d"] = p.d;
  j["seed"] = p.seed;
  j["theta_star"] = to_std(p.theta_star);
  j["sensor_locations"] = to_std(p.observations.sensor_locations);
  j["observations"] = to_std(p.observations.values);
  j["sigma_obs"] = p.observations.noise_std;
  return j.dump(2);
}

SyntheticProblem synthetic_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  SyntheticProblem p;
  p.d = j.at("d").get<Eigen::Index>();
  p.seed = j.at("seed").get<std::uint64_t>();
  p.theta_star = from_std(j.at("theta_star").get<std::vector<double>>());
  p.observations.sensor_locations = from_std(j.at("sensor_locations").get<std::vector<double>>());
  p.observations.values = from_std(j.at("observations").get<std::vector<double>>());
  p.observations.noise_std = j.at("sigma_obs").get<double>();
  if (p.theta_star.size() != p.d || p.observations.values.size() != p.observations.sensor_locations.size()) {
    throw std::invalid_argument("synthetic_from_json: inconsistent sizes");
  }
  return p;
}

}  // namespace pdmp
