#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "pdmp/errors.hpp"
#include "pdmp/metrics.hpp"

namespace pdmp {

namespace {

using Array = Eigen::ArrayXd;
using Index = Eigen::Index;

constexpr Index kLeaf = 32;
// Kernel terms more than exp(-kPrune) below a row's largest term are skipped, which is
// below the rounding of the row sum for any practical sample size.
constexpr double kPrune = 50.0;
// Anderson memory for the accelerated sweeps at the target eps.
constexpr int kAndersonMemory = 20;
// Accelerated sweeps before Newton takes over on problems whose plan fits in memory.
constexpr int kNewtonAfter = 100;
// Averaged symmetric sweeps for OT(a, a) before falling back to the general solver.
constexpr int kSelfSweeps = 100;

// Points reordered as the leaves of a median-split tree, so that each run of kLeaf
// consecutive rows is spatially compact, together with the bounding box of each run.
struct Cloud {
  Matrix pts;
  Matrix lo, hi;  // one row per block
  Index blocks() const { return lo.rows(); }
  Index block_size(Index b) const { return std::min(kLeaf, pts.rows() - b * kLeaf); }
};

void split(const Matrix& pts, std::vector<Index>& idx, std::size_t begin, std::size_t end) {
  if (end - begin <= static_cast<std::size_t>(kLeaf)) return;
  Index axis = 0;
  double widest = -1.0;
  for (Index k = 0; k < pts.cols(); ++k) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = begin; i < end; ++i) {
      lo = std::min(lo, pts(idx[i], k));
      hi = std::max(hi, pts(idx[i], k));
    }
    if (hi - lo > widest) {
      widest = hi - lo;
      axis = k;
    }
  }
  // Split on a multiple of kLeaf so that leaves line up with blocks.
  const std::size_t leaf = static_cast<std::size_t>(kLeaf);
  const std::size_t mid = begin + ((end - begin) / 2 + leaf - 1) / leaf * leaf;
  std::nth_element(idx.begin() + static_cast<std::ptrdiff_t>(begin), idx.begin() + static_cast<std::ptrdiff_t>(mid),
                   idx.begin() + static_cast<std::ptrdiff_t>(end),
                   [&](Index a, Index b) { return pts(a, axis) < pts(b, axis); });
  split(pts, idx, begin, mid);
  split(pts, idx, mid, end);
}

Cloud make_cloud(const Matrix& a) {
  std::vector<Index> idx(static_cast<std::size_t>(a.rows()));
  std::iota(idx.begin(), idx.end(), Index{0});
  split(a, idx, 0, idx.size());
  Cloud c;
  c.pts.resize(a.rows(), a.cols());
  for (Index i = 0; i < a.rows(); ++i) c.pts.row(i) = a.row(idx[static_cast<std::size_t>(i)]);
  const Index nb = (a.rows() + kLeaf - 1) / kLeaf;
  c.lo.resize(nb, a.cols());
  c.hi.resize(nb, a.cols());
  for (Index b = 0; b < nb; ++b) {
    const auto rows = c.pts.middleRows(b * kLeaf, c.block_size(b));
    c.lo.row(b) = rows.colwise().minCoeff();
    c.hi.row(b) = rows.colwise().maxCoeff();
  }
  return c;
}

// out_i = -eps * log sum_j w exp((h_j - |x_i - y_j|^2) / eps), uniform weight w = 1/m.
// When plan is given, row i of it receives the normalized kernel row divided by n,
// so that its row sums are exactly 1/n.
Array softmin(const Cloud& x, const Cloud& y, const Array& h, double eps, Matrix* plan = nullptr) {
  const Index n = x.pts.rows(), m = y.pts.rows(), d = x.pts.cols(), nb = y.blocks();
  const double log_w = -std::log(static_cast<double>(m));
  Array hmax(nb);
  for (Index b = 0; b < nb; ++b) hmax[b] = h.segment(b * kLeaf, y.block_size(b)).maxCoeff();
  Array out(n), t(m), bound(nb);
  std::vector<Index> visited;
  if (plan) plan->setZero(n, m);
  for (Index i = 0; i < n; ++i) {
    const auto xi = x.pts.row(i);
    for (Index b = 0; b < nb; ++b) {
      double gap2 = 0.0;
      for (Index k = 0; k < d; ++k) {
        const double g = std::max({0.0, y.lo(b, k) - xi[k], xi[k] - y.hi(b, k)});
        gap2 += g * g;
      }
      bound[b] = (hmax[b] - gap2) / eps;
    }
    auto eval = [&](Index b) {
      auto seg = t.segment(b * kLeaf, y.block_size(b));
      seg = h.segment(b * kLeaf, y.block_size(b));
      for (Index k = 0; k < d; ++k) seg -= (y.pts.col(k).segment(b * kLeaf, y.block_size(b)).array() - xi[k]).square();
      seg /= eps;
      visited.push_back(b);
      return seg.maxCoeff();
    };
    visited.clear();
    Index first = 0;
    bound.maxCoeff(&first);
    double mx = eval(first);
    for (Index b = 0; b < nb; ++b) {
      if (b != first && bound[b] >= mx - kPrune) mx = std::max(mx, eval(b));
    }
    double sum = 0.0;
    for (Index b : visited) sum += (t.segment(b * kLeaf, y.block_size(b)) - mx).exp().sum();
    out[i] = -eps * (mx + std::log(sum) + log_w);
    if (plan) {
      const double scale = 1.0 / (sum * static_cast<double>(n));
      for (Index b : visited) {
        plan->row(i).segment(b * kLeaf, y.block_size(b)) =
            ((t.segment(b * kLeaf, y.block_size(b)) - mx).exp() * scale).matrix().transpose();
      }
    }
  }
  return out;
}

// L-infinity marginal residual implied by a pending update: max_i |exp((h_i - h_new_i)/eps) - 1|.
double residual(const Array& h, const Array& h_new, double eps) {
  return (((h - h_new) / eps).exp() - 1.0).abs().maxCoeff();
}

// Ascent direction for the semi-dual g -> mean(softmin(g)) + mean(g), whose Hessian is
// -(diag(c) - n P'P) / eps. Solved by conjugate gradients; the constant null direction
// is removed by adding mean(v)/m along it.
Vector newton_direction(const Matrix& plan, const Vector& c, const Vector& grad, double eps, double forcing) {
  const Index m = plan.cols();
  const double n = static_cast<double>(plan.rows());
  auto apply = [&](const Vector& v) -> Vector {
    return c.cwiseProduct(v) - n * (plan.transpose() * (plan * v)) + Vector::Constant(m, v.mean() / m);
  };
  const Vector rhs = eps * grad;
  Vector x = Vector::Zero(m), r = rhs, p = r;
  double rr = r.squaredNorm();
  const double stop = forcing * forcing * rr;
  for (Index it = 0; it < 2 * m && rr > stop; ++it) {
    const Vector ap = apply(p);
    const double alpha = rr / p.dot(ap);
    x += alpha * p;
    r -= alpha * ap;
    const double next = r.squaredNorm();
    p = r + (next / rr) * p;
    rr = next;
  }
  return x;
}

double squared_diameter(const Cloud& x, const Cloud& y) {
  const Vector lo = x.lo.colwise().minCoeff().cwiseMin(y.lo.colwise().minCoeff()).transpose();
  const Vector hi = x.hi.colwise().maxCoeff().cwiseMax(y.hi.colwise().maxCoeff()).transpose();
  return (hi - lo).squaredNorm();
}

// Anderson mixing over the last few fixed-point residuals (type II, Tikhonov-damped).
class Anderson {
 public:
  explicit Anderson(int memory) : memory_(memory) {}

  Vector next(const Vector& x, const Vector& r) {
    if (has_prev_) {
      dx_.push_back(x - x_prev_);
      dr_.push_back(r - r_prev_);
      if (static_cast<int>(dx_.size()) > memory_) {
        dx_.erase(dx_.begin());
        dr_.erase(dr_.begin());
      }
    }
    x_prev_ = x;
    r_prev_ = r;
    has_prev_ = true;
    if (dx_.empty()) return x + r;
    const Index k = static_cast<Index>(dx_.size());
    Matrix X(x.size(), k), R(x.size(), k);
    for (Index j = 0; j < k; ++j) {
      X.col(j) = dx_[static_cast<std::size_t>(j)];
      R.col(j) = dr_[static_cast<std::size_t>(j)];
    }
    Matrix A = R.transpose() * R;
    A.diagonal().array() += 1e-10 * A.diagonal().maxCoeff() + std::numeric_limits<double>::min();
    const Vector gamma = A.ldlt().solve(R.transpose() * r);
    return x + r - (X + R) * gamma;
  }

  void reset() {
    dx_.clear();
    dr_.clear();
    has_prev_ = false;
  }

 private:
  int memory_;
  std::vector<Vector> dx_, dr_;
  Vector x_prev_, r_prev_;
  bool has_prev_ = false;
};

// OT_eps(x, y) as the semi-dual value mean(softmin(g)) + mean(g), whose row marginals are
// exact, at a g whose column marginals match to the tolerance. One sweep per annealing
// stage from the squared diameter down warm-starts g; at the target eps the sweep map
// g -> softmin(y, x, softmin(x, y, g)) is Anderson-accelerated. If that has not converged
// after kNewtonAfter sweeps and the dense plan fits the memory cap, damped Newton steps
// on the semi-dual take over, with a plain sweep whenever a step fails the
// sufficient-increase test.
double cross_cost(const Cloud& x, const Cloud& y, const SinkhornOptions& o) {
  const double eps = o.epsilon;
  const Index n = x.pts.rows(), m = y.pts.rows();
  Array f, g = Array::Zero(m);
  int it = 0;
  for (double e = squared_diameter(x, y); e > 2.0 * eps && it < o.max_iterations; e *= 0.5, ++it) {
    f = softmin(x, y, g, e);
    g = softmin(y, x, f, e);
  }
  double res = std::numeric_limits<double>::infinity(), best = res;
  Anderson anderson(kAndersonMemory);
  const int sweep_end = n * m <= o.newton_max_entries ? std::min(o.max_iterations, it + kNewtonAfter) : o.max_iterations;
  for (; it < sweep_end; ++it) {
    f = softmin(x, y, g, eps);
    const Array next = softmin(y, x, f, eps);
    res = residual(g, next, eps);
    if (res < o.tolerance) return f.mean() + g.mean();
    if (res > 10.0 * best) anderson.reset();
    best = std::min(best, res);
    g = anderson.next(g.matrix(), (next - g).matrix()).array();
  }
  if (it < o.max_iterations) {
    Matrix plan;
    f = softmin(x, y, g, eps, &plan);
    for (; it < o.max_iterations; ++it) {
      const Vector c = plan.colwise().sum().transpose();
      res = (c.array() * static_cast<double>(m) - 1.0).abs().maxCoeff();
      if (res < o.tolerance) return f.mean() + g.mean();
      const Vector grad = Vector::Constant(m, 1.0 / static_cast<double>(m)) - c;
      const Vector step = newton_direction(plan, c, grad, eps, std::min(0.5, std::sqrt(res)));
      const double value = f.mean() + g.mean(), slope = step.dot(grad);
      bool accepted = false;
      double s = 1.0;
      for (int k = 0; k < 20 && slope > 0.0; ++k, s *= 0.5) {
        const Array trial = g + s * step.array();
        const Array f_trial = softmin(x, y, trial, eps, &plan);
        if (f_trial.mean() + trial.mean() >= value + 1e-4 * s * slope) {
          g = trial;
          f = f_trial;
          accepted = true;
          break;
        }
      }
      if (!accepted) {
        g = softmin(y, x, softmin(x, y, g, eps), eps);
        f = softmin(x, y, g, eps, &plan);
      }
    }
  }
  throw ConvergenceError("sinkhorn: marginal residual above tolerance at the iteration cap", res);
}

// OT_eps(a, a) from the symmetric fixed point f = softmin(a, a, f) with averaged
// updates, falling back to the general solver if that stalls.
double self_cost(const Cloud& a, const SinkhornOptions& o) {
  Array f = Array::Zero(a.pts.rows());
  for (int it = 0; it < std::min(kSelfSweeps, o.max_iterations); ++it) {
    const Array next = softmin(a, a, f, o.epsilon);
    if (residual(f, next, o.epsilon) < o.tolerance) return 2.0 * f.mean();
    f = 0.5 * (f + next);
  }
  return cross_cost(a, a, o);
}

void check_inputs(const Matrix& a, const Matrix& b, const SinkhornOptions& o) {
  if (a.rows() == 0 || b.rows() == 0) throw std::invalid_argument("sinkhorn: empty sample set");
  if (a.cols() != b.cols()) throw std::invalid_argument("sinkhorn: dimension mismatch");
  if (!(o.epsilon > 0.0)) throw std::invalid_argument("sinkhorn: epsilon must be positive");
}

}  // namespace

double sinkhorn_cost(const Matrix& a, const Matrix& b, const SinkhornOptions& o) {
  check_inputs(a, b, o);
  return cross_cost(make_cloud(a), make_cloud(b), o);
}

double sinkhorn_divergence(const Matrix& a, const Matrix& b, const SinkhornOptions& o) {
  check_inputs(a, b, o);
  const Cloud ca = make_cloud(a), cb = make_cloud(b);
  return cross_cost(ca, cb, o) - 0.5 * self_cost(ca, o) - 0.5 * self_cost(cb, o);
}

}  // namespace pdmp
