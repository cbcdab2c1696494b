#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "pdmp/types.hpp"

namespace pdmp {

enum class EventKind { initial, flip, bounce, refresh };

struct SkeletonEvent {
  double time = 0.0;
  Vector position;
  /// Velocity after the event.
  Vector velocity;
  EventKind kind = EventKind::initial;
  /// Flipped coordinate (zero-based) for Zig-Zag flips, -1 otherwise.
  int component = -1;
};

/// Piecewise-linear trajectory: the state between events moves with constant velocity.
struct Skeleton {
  std::vector<SkeletonEvent> events;
  double final_time = 0.0;
  /// Trajectory time reached once the k-th true-model evaluation of the run had been
  /// used; non-decreasing.
  std::vector<double> evaluation_times;

  Eigen::Index dimension() const { return events.empty() ? 0 : events.front().position.size(); }
  /// Linear interpolation; t must lie in [0, final_time].
  Vector position_at(double t) const;
};

std::string event_label(const SkeletonEvent& e);

struct Moments {
  Vector mean;
  Vector var;
};

/// Exact time averages over [burn_in, end] of the piecewise-linear path (end defaults to
/// final_time). Throws std::invalid_argument on an empty window.
Moments skeleton_moments(const Skeleton& sk, double burn_in, double end = -1.0);

/// Positions at burn_in + j (end - burn_in) / n for j = 1..n, one per row.
Matrix discretize(const Skeleton& sk, Eigen::Index n, double burn_in, double end = -1.0);

/// CSV rows k,t,kind,xi_1..xi_d,v_1..v_d.
void write_skeleton_csv(std::ostream& out, const Skeleton& sk);

}  // namespace pdmp
