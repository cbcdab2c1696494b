#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>

#include "pdmp/affine_map.hpp"
#include "pdmp/rate_inversion.hpp"
#include "pdmp/skeleton.hpp"
#include "pdmp/surrogate.hpp"

namespace pdmp {

struct PdmpOptions {
  /// Offset decay rate.
  double beta = 0.0;
  /// Refreshment rate (Bouncy Particle only).
  double lambda_ref = 0.1;
  double max_time = std::numeric_limits<double>::infinity();
  /// Stop once the potential's evaluation counter reaches this value.
  std::uint64_t max_evaluations = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t seed = 0;
  /// Initial offset; defaults to 1 for surrogates with a state-independent gradient
  /// (constant, random_gradient) and 0 otherwise.
  std::optional<double> initial_offset;
  int max_corrections = 1000;
  /// Longest ray searched for a single candidate. Exhausting it before max_time aborts the run.
  double max_horizon = 1e5;
  InversionOptions inversion;
};

struct PdmpStats {
  std::uint64_t candidates = 0;
  std::uint64_t accepted = 0;
  std::uint64_t corrections = 0;
  std::uint64_t refreshes = 0;
  std::uint64_t evaluations = 0;
  /// Smallest thinning ratio seen; 1 when every candidate was accepted with certainty.
  double min_acceptance_ratio = 1.0;
  /// Largest thinning ratio seen; the offset corrections keep it at or below 1.
  double max_acceptance_ratio = 0.0;
  double max_abs_position = 0.0;
  bool aborted = false;
  std::string abort_reason;

  double acceptance_rate() const {
    return candidates == 0 ? 1.0 : static_cast<double>(accepted) / static_cast<double>(candidates);
  }
};

struct PdmpResult {
  Skeleton skeleton;
  PdmpStats stats;
};

/// Zig-Zag process with surrogate-based thinning and per-component offsets.
/// The initial velocity is uniform on {-1, +1}^d.
PdmpResult zigzag_run(TransformedPotential& tp, Surrogate& surrogate, const Vector& xi0,
                      const PdmpOptions& options);

/// Bouncy Particle sampler with surrogate-based thinning, a scalar offset and Gaussian
/// refreshment at rate lambda_ref. The initial velocity is N(0, I).
PdmpResult bps_run(TransformedPotential& tp, Surrogate& surrogate, const Vector& xi0, const PdmpOptions& options);

}  // namespace pdmp
