#include "pdmp/skeleton.hpp"

#include <algorithm>
#include <iomanip>
#include <ostream>
#include <stdexcept>

namespace pdmp {

namespace {

// Index of the last event with time <= t.
std::size_t segment_index(const Skeleton& sk, double t) {
  auto it = std::upper_bound(sk.events.begin(), sk.events.end(), t,
                             [](double value, const SkeletonEvent& e) { return value < e.time; });
  if (it == sk.events.begin()) throw std::invalid_argument("Skeleton: time before the first event");
  return static_cast<std::size_t>(it - sk.events.begin()) - 1;
}

}  // namespace

Vector Skeleton::position_at(double t) const {
  if (events.empty()) throw std::invalid_argument("Skeleton: empty");
  if (t < 0.0 || t > final_time) throw std::invalid_argument("Skeleton: time outside [0, final_time]");
  const SkeletonEvent& e = events[segment_index(*this, t)];
  return e.position + e.velocity * (t - e.time);
}

std::string event_label(const SkeletonEvent& e) {
  switch (e.kind) {
    case EventKind::initial: return "initial";
    case EventKind::flip: return "flip:" + std::to_string(e.component + 1);
    case EventKind::bounce: return "bounce";
    case EventKind::refresh: return "refresh";
  }
  return "unknown";
}

Moments skeleton_moments(const Skeleton& sk, double burn_in, double end) {
  if (end < 0.0) end = sk.final_time;
  if (sk.events.empty() || !(end > burn_in) || burn_in < 0.0 || end > sk.final_time) {
    throw std::invalid_argument("skeleton_moments: empty averaging window");
  }
  const Eigen::Index d = sk.dimension();
  Vector first = Vector::Zero(d), second = Vector::Zero(d);
  for (std::size_t k = 0; k < sk.events.size(); ++k) {
    const SkeletonEvent& e = sk.events[k];
    const double seg_end = k + 1 < sk.events.size() ? sk.events[k + 1].time : sk.final_time;
    const double lo = std::max(e.time, burn_in), hi = std::min(seg_end, end);
    if (!(hi > lo)) continue;
    const Vector x0 = e.position + e.velocity * (lo - e.time);
    const double h = hi - lo;
    const auto& v = e.velocity.array();
    first.array() += h * x0.array() + 0.5 * h * h * v;
    second.array() += h * x0.array().square() + h * h * x0.array() * v + h * h * h / 3.0 * v.square();
  }
  const double span = end - burn_in;
  Moments m;
  m.mean = first / span;
  m.var = (second / span).array() - m.mean.array().square();
  m.var = m.var.cwiseMax(0.0);
  return m;
}

Matrix discretize(const Skeleton& sk, Eigen::Index n, double burn_in, double end) {
  if (end < 0.0) end = sk.final_time;
  if (n < 1) throw std::invalid_argument("discretize: n must be >= 1");
  if (sk.events.empty() || burn_in < 0.0 || end > sk.final_time || end < burn_in) {
    throw std::invalid_argument("discretize: bad window");
  }
  const Eigen::Index d = sk.dimension();
  Matrix out(n, d);
  std::size_t k = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double t = j + 1 == n ? end : burn_in + static_cast<double>(j + 1) * (end - burn_in) / static_cast<double>(n);
    while (k + 1 < sk.events.size() && sk.events[k + 1].time <= t) ++k;
    const SkeletonEvent& e = sk.events[k];
    out.row(j) = (e.position + e.velocity * (t - e.time)).transpose();
  }
  return out;
}

void write_skeleton_csv(std::ostream& out, const Skeleton& sk) {
  const Eigen::Index d = sk.dimension();
  out << "k,t,kind";
  for (Eigen::Index i = 0; i < d; ++i) out << ",xi_" << i + 1;
  for (Eigen::Index i = 0; i < d; ++i) out << ",v_" << i + 1;
  out << '\n' << std::setprecision(17);
  for (std::size_t k = 0; k < sk.events.size(); ++k) {
    const SkeletonEvent& e = sk.events[k];
    out << k << ',' << e.time << ',' << event_label(e);
    for (Eigen::Index i = 0; i < d; ++i) out << ',' << e.position[i];
    for (Eigen::Index i = 0; i < d; ++i) out << ',' << e.velocity[i];
    out << '\n';
  }
}

}  // namespace pdmp
