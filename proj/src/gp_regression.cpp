#include "pdmp/gp_regression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "pdmp/errors.hpp"
#include "pdmp/optimize.hpp"
#include "pdmp/rng.hpp"

namespace pdmp::gp {

namespace {

void require_same_dim(const Vector& a, const Vector& b, const Hyperparams& h) {
  if (a.size() != h.dimension() || b.size() != h.dimension()) {
    throw std::invalid_argument("kernel: point dimension does not match length_scales");
  }
}

// k(a, b) given precomputed 1/l^2
double se_kernel(const Vector& a, const Vector& b, double signal_var, const Vector& inv_sq) {
  return signal_var * std::exp(-0.5 * ((a - b).array().square() * inv_sq.array()).sum());
}

// Box for the log-space search; outside it the objective reports +inf.
constexpr double kLogSignalMin = -20.0;
constexpr double kLogSignalMax = 15.0;
constexpr double kLogLengthMin = -6.9;
constexpr double kLogLengthMax = 6.9;
constexpr double kLogNoiseMin = -27.6;  // ~1e-12
constexpr double kLogNoiseMax = 4.6;

struct LogParams {
  static Vector encode(const Hyperparams& h) {
    const Eigen::Index d = h.dimension();
    Vector t(d + 3);
    t[0] = h.mean_const;
    t[1] = std::log(h.signal_var);
    for (Eigen::Index j = 0; j < d; ++j) t[2 + j] = std::log(h.length_scales[j]);
    t[d + 2] = std::log(h.noise_var);
    return t;
  }
  static Hyperparams decode(const Vector& t) {
    const Eigen::Index d = t.size() - 3;
    Hyperparams h;
    h.mean_const = t[0];
    h.signal_var = std::exp(t[1]);
    h.length_scales = t.segment(2, d).array().exp();
    h.noise_var = std::exp(t[d + 2]);
    return h;
  }
  static Vector clamp(Vector t) {
    const Eigen::Index d = t.size() - 3;
    t[1] = std::clamp(t[1], kLogSignalMin, kLogSignalMax);
    for (Eigen::Index j = 0; j < d; ++j) t[2 + j] = std::clamp(t[2 + j], kLogLengthMin, kLogLengthMax);
    t[d + 2] = std::clamp(t[d + 2], kLogNoiseMin, kLogNoiseMax);
    return t;
  }
};

Vector centered_targets(const Dataset& data, double mean_const, bool include_gradients) {
  const Eigen::Index n = static_cast<Eigen::Index>(data.size());
  const Eigen::Index d = data.dimension();
  Vector r(include_gradients ? n + n * d : n);
  for (Eigen::Index i = 0; i < n; ++i) r[i] = data.value(i) - mean_const;
  if (include_gradients) {
    for (Eigen::Index i = 0; i < n; ++i) r.segment(n + i * d, d) = data.gradient(i);
  }
  return r;
}

}  // namespace

void Hyperparams::validate() const {
  if (length_scales.size() == 0) throw std::invalid_argument("Hyperparams: no length scales");
  if (!(length_scales.array() > 0.0).all()) {
    throw std::invalid_argument("Hyperparams: length scales must be positive");
  }
  if (!(signal_var >= 0.0) || !(noise_var >= 0.0) || !std::isfinite(mean_const)) {
    throw std::invalid_argument("Hyperparams: variances must be non-negative");
  }
}

Vector Hyperparams::pack() const {
  const Eigen::Index d = dimension();
  Vector p(d + 3);
  p[0] = mean_const;
  p[1] = signal_var;
  p.segment(2, d) = length_scales;
  p[d + 2] = noise_var;
  return p;
}

Hyperparams Hyperparams::unpack(const Vector& packed) {
  const Eigen::Index d = packed.size() - 3;
  Hyperparams h;
  h.mean_const = packed[0];
  h.signal_var = packed[1];
  h.length_scales = packed.segment(2, d);
  h.noise_var = packed[d + 2];
  return h;
}

Hyperparams Hyperparams::defaults(Eigen::Index dim) {
  Hyperparams h;
  h.length_scales = Vector::Ones(dim);
  return h;
}

Dataset::Dataset(Eigen::Index dim, bool with_gradients) : dim_(dim), with_gradients_(with_gradients) {
  if (dim < 1) throw std::invalid_argument("Dataset: dimension must be >= 1");
}

bool Dataset::contains(const Vector& x, double tol) const {
  for (const auto& p : inputs_) {
    if ((p - x).cwiseAbs().maxCoeff() <= tol) return true;
  }
  return false;
}

void Dataset::add(const Vector& x, double y, const Vector& g) {
  if (x.size() != dim_) throw std::invalid_argument("Dataset::add: input dimension mismatch");
  if (with_gradients_ && g.size() != dim_) {
    throw std::invalid_argument("Dataset::add: gradient observation required");
  }
  if (contains(x)) throw std::invalid_argument("Dataset::add: duplicate input");
  inputs_.push_back(x);
  values_.push_back(y);
  if (with_gradients_) gradients_.push_back(g);
}

Dataset Dataset::without_gradients() const {
  Dataset out(dim_, false);
  out.inputs_ = inputs_;
  out.values_ = values_;
  return out;
}

double kernel_eval(const Vector& a, const Vector& b, const Hyperparams& h) {
  require_same_dim(a, b, h);
  return se_kernel(a, b, h.signal_var, h.length_scales.array().square().inverse().matrix());
}

Vector kernel_grad_x(const Vector& a, const Vector& b, const Hyperparams& h) {
  require_same_dim(a, b, h);
  const Vector inv_sq = h.length_scales.array().square().inverse();
  const double k = se_kernel(a, b, h.signal_var, inv_sq);
  return k * ((b - a).array() * inv_sq.array()).matrix();
}

double kernel_cross_derivative(const Vector& a, const Vector& b, Eigen::Index p, Eigen::Index q,
                               const Hyperparams& h) {
  require_same_dim(a, b, h);
  const Eigen::Index d = h.dimension();
  if (p < 0 || p >= d || q < 0 || q >= d) {
    throw std::out_of_range("kernel_cross_derivative: index out of range");
  }
  const Vector inv_sq = h.length_scales.array().square().inverse();
  const double k = se_kernel(a, b, h.signal_var, inv_sq);
  const double delta = p == q ? inv_sq[p] : 0.0;
  return k * (delta - (a[p] - b[p]) * (a[q] - b[q]) * inv_sq[p] * inv_sq[q]);
}

Matrix joint_covariance(const Dataset& data, const Hyperparams& h, bool include_gradients) {
  if (data.dimension() != h.dimension()) {
    throw std::invalid_argument("joint_covariance: dataset/hyperparameter dimension mismatch");
  }
  if (include_gradients && !data.has_gradients()) {
    throw std::invalid_argument("joint_covariance: dataset carries no gradients");
  }
  const Eigen::Index n = static_cast<Eigen::Index>(data.size());
  const Eigen::Index d = data.dimension();
  const Eigen::Index total = include_gradients ? n + n * d : n;
  const Vector w = h.length_scales.array().square().inverse();
  Matrix K(total, total);
  Vector r(d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      r.noalias() = data.input(i) - data.input(j);
      const double k = h.signal_var * std::exp(-0.5 * (r.array().square() * w.array()).sum());
      K(i, j) = k;
      if (!include_gradients) continue;
      for (Eigen::Index p = 0; p < d; ++p) {
        K(n + i * d + p, j) = -k * r[p] * w[p];
        K(i, n + j * d + p) = k * r[p] * w[p];
        for (Eigen::Index q = 0; q < d; ++q) {
          const double delta = p == q ? w[p] : 0.0;
          K(n + i * d + p, n + j * d + q) = k * (delta - r[p] * r[q] * w[p] * w[q]);
        }
      }
    }
  }
  return K;
}

std::optional<LmlResult> log_marginal_likelihood(const Dataset& data, const Hyperparams& h,
                                                 bool include_gradients, double relative_jitter) {
  h.validate();
  if (data.empty()) throw std::invalid_argument("log_marginal_likelihood: empty dataset");
  const Eigen::Index n = static_cast<Eigen::Index>(data.size());
  const Eigen::Index d = data.dimension();
  const Matrix K = joint_covariance(data, h, include_gradients);
  const Eigen::Index total = K.rows();

  Matrix Ky = K;
  Ky.diagonal().array() += h.noise_var + relative_jitter * h.signal_var;
  Eigen::LLT<Matrix> llt(Ky);
  if (llt.info() != Eigen::Success) return std::nullopt;
  const Matrix& L = llt.matrixLLT();
  if (!(L.diagonal().array() > 0.0).all()) return std::nullopt;

  const Vector resid = centered_targets(data, h.mean_const, include_gradients);
  const Vector alpha = llt.solve(resid);

  LmlResult out;
  out.value = -0.5 * resid.dot(alpha) - L.diagonal().array().log().sum() -
              0.5 * static_cast<double>(total) * std::log(2.0 * std::numbers::pi);

  const Matrix W = alpha * alpha.transpose() - llt.solve(Matrix::Identity(total, total));
  out.gradient = Vector::Zero(d + 3);
  out.gradient[0] = alpha.head(n).sum();
  // dKy/dsignal_var = K/signal_var + jitter I
  out.gradient[1] =
      0.5 * ((W.array() * K.array()).sum() / h.signal_var + relative_jitter * W.trace());
  out.gradient[d + 2] = 0.5 * W.trace();

  const Vector ell = h.length_scales;
  const Vector w = ell.array().square().inverse();
  Vector acc = Vector::Zero(d);
  Vector r(d), inv_cube(d);
  for (Eigen::Index l = 0; l < d; ++l) inv_cube[l] = 1.0 / (ell[l] * ell[l] * ell[l]);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      r.noalias() = data.input(i) - data.input(j);
      const double k = K(i, j);
      for (Eigen::Index l = 0; l < d; ++l) {
        const double D = k * r[l] * r[l] * inv_cube[l];
        double s = W(i, j) * D;
        if (include_gradients) {
          const double dw_l = -2.0 * inv_cube[l];
          for (Eigen::Index p = 0; p < d; ++p) {
            const double own = p == l ? 2.0 * k * r[p] * inv_cube[l] : 0.0;
            s += W(n + i * d + p, j) * (-D * r[p] * w[p] + own);
            s += W(i, n + j * d + p) * (D * r[p] * w[p] - own);
            const double dw_p = p == l ? dw_l : 0.0;
            for (Eigen::Index q = 0; q < d; ++q) {
              const double dw_q = q == l ? dw_l : 0.0;
              const double base = (p == q ? w[p] : 0.0) - r[p] * r[q] * w[p] * w[q];
              const double dbase = (p == q ? dw_p : 0.0) - r[p] * r[q] * (dw_p * w[q] + w[p] * dw_q);
              s += W(n + i * d + p, n + j * d + q) * (D * base + k * dbase);
            }
          }
        }
        acc[l] += s;
      }
    }
  }
  out.gradient.segment(2, d) = 0.5 * acc;
  return out;
}

Model::Model(Hyperparams h, Dataset data, bool include_gradients)
    : h_(std::move(h)), data_(std::move(data)), include_gradients_(include_gradients) {
  h_.validate();
  if (data_.empty()) throw std::invalid_argument("gp::Model: empty dataset");
  if (data_.dimension() != h_.dimension()) {
    throw std::invalid_argument("gp::Model: dataset/hyperparameter dimension mismatch");
  }
  if (include_gradients_ && !data_.has_gradients()) {
    throw std::invalid_argument("gp::Model: gradient observations requested but absent");
  }
  inv_sq_ = h_.length_scales.array().square().inverse();
  const Matrix K = joint_covariance(data_, h_, include_gradients_);
  const Vector resid = centered_targets(data_, h_.mean_const, include_gradients_);
  for (double jitter = kJitterFloor; jitter <= kJitterCeiling * 1.0000001; jitter *= 10.0) {
    Matrix Ky = K;
    Ky.diagonal().array() += h_.noise_var + jitter * h_.signal_var;
    Eigen::LLT<Matrix> llt(Ky);
    if (llt.info() != Eigen::Success) continue;
    Matrix L = llt.matrixL();
    if (!(L.diagonal().array() > 0.0).all() || !L.allFinite()) continue;
    jitter_ = jitter;
    alpha_ = llt.solve(resid);
    lml_ = -0.5 * resid.dot(alpha_) - L.diagonal().array().log().sum() -
           0.5 * static_cast<double>(K.rows()) * std::log(2.0 * std::numbers::pi);
    chol_ = std::move(L);
    return;
  }
  throw FitError("gp::Model: kernel matrix not SPD after jitter escalation");
}

void Model::check_dim(const Vector& x) const {
  if (x.size() != h_.dimension()) throw std::invalid_argument("gp::Model: query dimension mismatch");
}

Vector Model::cross_covariance(const Vector& x) const {
  const Eigen::Index n = static_cast<Eigen::Index>(data_.size());
  const Eigen::Index d = h_.dimension();
  Vector ks(include_gradients_ ? n + n * d : n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector r = x - data_.input(i);
    const double k = h_.signal_var * std::exp(-0.5 * (r.array().square() * inv_sq_.array()).sum());
    ks[i] = k;
    if (include_gradients_) {
      // cov(f(x), d_q f(x_i)) = dk/db_q
      ks.segment(n + i * d, d) = k * (r.array() * inv_sq_.array()).matrix();
    }
  }
  return ks;
}

double Model::predict_mean(const Vector& x) const {
  check_dim(x);
  const Eigen::Index n = static_cast<Eigen::Index>(data_.size());
  const Eigen::Index d = h_.dimension();
  double m = h_.mean_const;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector& xi = data_.input(i);
    double q = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      const double r = x[j] - xi[j];
      q += r * r * inv_sq_[j];
    }
    const double k = h_.signal_var * std::exp(-0.5 * q);
    double contrib = alpha_[i];
    if (include_gradients_) {
      for (Eigen::Index j = 0; j < d; ++j) contrib += alpha_[n + i * d + j] * (x[j] - xi[j]) * inv_sq_[j];
    }
    m += k * contrib;
  }
  return m;
}

double Model::predict_variance(const Vector& x) const {
  check_dim(x);
  const Vector ks = cross_covariance(x);
  const Vector v = chol_.triangularView<Eigen::Lower>().solve(ks);
  return std::max(0.0, h_.signal_var - v.squaredNorm());
}

Vector Model::predict_mean_grad(const Vector& x) const {
  check_dim(x);
  const Eigen::Index n = static_cast<Eigen::Index>(data_.size());
  const Eigen::Index d = h_.dimension();
  Vector grad = Vector::Zero(d);
  Vector r(d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector& xi = data_.input(i);
    double q = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      r[j] = (x[j] - xi[j]) * inv_sq_[j];  // scaled difference
      q += (x[j] - xi[j]) * r[j];
    }
    const double k = h_.signal_var * std::exp(-0.5 * q);
    // value block: d/dx_p k(x, x_i) = -k r_p
    grad.noalias() -= (k * alpha_[i]) * r;
    if (include_gradients_) {
      // gradient block: d/dx_p [k r_q] = k (delta_pq w_p - r_p r_q)
      const auto beta = alpha_.segment(n + i * d, d);
      const double rb = r.dot(beta);
      grad.noalias() += k * (beta.cwiseProduct(inv_sq_) - rb * r);
    }
  }
  return grad;
}

Model fit(const Dataset& data, const Hyperparams& init, bool include_gradients,
          const FitOptions& options) {
  init.validate();
  if (data.empty()) throw std::invalid_argument("gp::fit: empty dataset");
  if (data.dimension() != init.dimension()) {
    throw std::invalid_argument("gp::fit: dataset/hyperparameter dimension mismatch");
  }
  if (!options.optimize) return Model(init, data, include_gradients);

  // Minimizes f(clamp(t)): outside the box the objective is flat in the clamped
  // coordinates, so their gradient is zero and the search settles on the boundary.
  Objective objective = [&](const Vector& t_raw, Vector& grad) -> double {
    if (!t_raw.allFinite()) return std::numeric_limits<double>::infinity();
    const Vector t = LogParams::clamp(t_raw);
    const Hyperparams h = LogParams::decode(t);
    const auto lml = log_marginal_likelihood(data, h, include_gradients);
    if (!lml || !std::isfinite(lml->value) || !lml->gradient.allFinite()) {
      return std::numeric_limits<double>::infinity();
    }
    const Eigen::Index d = h.dimension();
    grad.resize(t.size());
    grad[0] = -lml->gradient[0];
    grad[1] = -lml->gradient[1] * h.signal_var;
    grad.segment(2, d) = -(lml->gradient.segment(2, d).array() * h.length_scales.array());
    grad[d + 2] = -lml->gradient[d + 2] * h.noise_var;
    for (Eigen::Index j = 1; j < t.size(); ++j) {
      if (t_raw[j] != t[j]) grad[j] = 0.0;
    }
    return -lml->value;
  };

  BfgsOptions bfgs;
  bfgs.max_iterations = options.max_iterations;
  bfgs.gradient_tolerance = options.gradient_tolerance;
  bfgs.function_tolerance = options.function_tolerance;
  bfgs.max_evaluations = options.max_evaluations;

  Rng rng(options.seed);
  const Vector start = LogParams::clamp(LogParams::encode(init));
  std::optional<BfgsResult> best;
  for (int run = 0; run <= options.restarts; ++run) {
    Vector t0 = start;
    if (run > 0) {
      t0[1] += rng.normal();
      for (Eigen::Index j = 2; j < t0.size() - 1; ++j) t0[j] += 0.5 * rng.normal();
      t0[t0.size() - 1] += rng.normal();
      t0 = LogParams::clamp(t0);
    }
    Vector g0;
    if (!std::isfinite(objective(t0, g0))) continue;
    BfgsResult res = minimize_bfgs(objective, t0, bfgs);
    if (!std::isfinite(res.value)) continue;
    if (!best || res.value < best->value) best = std::move(res);
  }
  if (!best) throw FitError("gp::fit: objective not finite at any start");
  return Model(LogParams::decode(LogParams::clamp(best->x)), data, include_gradients);
}

}  // namespace pdmp::gp
