#pragma once

// Shared plumbing for the two PDMP samplers.

#include <cmath>
#include <optional>
#include <vector>

#include "pdmp/pdmp_sampler.hpp"

namespace pdmp::detail {

inline double default_offset(const Surrogate& s, const PdmpOptions& o) {
  if (o.initial_offset) return *o.initial_offset;
  return s.kind() == SurrogateKind::constant || s.kind() == SurrogateKind::random_gradient ? 1.0 : 0.0;
}

/// Tracks evaluations made during one candidate attempt so they can be harvested by the
/// surrogate and stamped with the trajectory time once the attempt is committed.
class AttemptLog {
 public:
  AttemptLog(TransformedPotential& tp, Surrogate& s, Skeleton& sk) : tp_(tp), s_(s), sk_(sk) {}

  void begin() {
    start_count_ = tp_.evaluations();
    harvest_.clear();
  }

  Evaluation evaluate(const Vector& xi) {
    Evaluation e = tp_.evaluate(xi);
    if (!e.saturated) harvest_.emplace_back(xi, e.value);
    return e;
  }

  void commit(double t) {
    const std::uint64_t now = tp_.evaluations();
    for (std::uint64_t k = start_count_; k < now; ++k) sk_.evaluation_times.push_back(t);
    start_count_ = now;
    for (const auto& [x, v] : harvest_) s_.observe(x, v);
    harvest_.clear();
  }

 private:
  TransformedPotential& tp_;
  Surrogate& s_;
  Skeleton& sk_;
  std::uint64_t start_count_ = 0;
  std::vector<std::pair<Vector, double>> harvest_;
};

inline double horizon(double t, const PdmpOptions& o) { return std::min(o.max_time - t, o.max_horizon); }

}  // namespace pdmp::detail
