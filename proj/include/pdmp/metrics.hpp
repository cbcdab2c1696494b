#pragma once

#include <cstdint>
#include <string>

#include "pdmp/affine_map.hpp"

namespace pdmp {

/// sqrt(mean_i (est_i - ref_i)^2). Throws std::invalid_argument on size mismatch.
double rmse(const Vector& est, const Vector& ref);
inline double rmse_mean(const Vector& est, const Vector& ref) { return rmse(est, ref); }
inline double rmse_var(const Vector& est, const Vector& ref) { return rmse(est, ref); }

struct SinkhornOptions {
  double epsilon = 0.02;
  /// Stop once both marginals match to this L-infinity relative residual.
  double tolerance = 1e-6;
  /// Cap on Sinkhorn sweeps plus Newton steps.
  int max_iterations = 5000;
  /// Newton steps on the semi-dual store the dense plan, so they only run when
  /// rows(a) * rows(b) <= newton_max_entries.
  std::int64_t newton_max_entries = 4'000'000;
};

/// Entropic OT cost OT_eps(a, b) with squared Euclidean cost and uniform weights
/// (dual objective at the fixed point). Rows are samples. Annealed, Anderson-accelerated
/// log-domain Sinkhorn sweeps, polished by Newton steps when the plan fits in memory;
/// kernel terms below exp(-50) of a row's largest term are skipped via per-block bounds.
/// Throws ConvergenceError carrying the marginal residual when the cap is reached.
double sinkhorn_cost(const Matrix& a, const Matrix& b, const SinkhornOptions& options = {});

/// S = OT(a, b) - OT(a, a)/2 - OT(b, b)/2.
double sinkhorn_divergence(const Matrix& a, const Matrix& b, const SinkhornOptions& options = {});

struct EssResult {
  /// Minimum over coordinates.
  double ess = 1.0;
  Vector per_coordinate;
  bool degenerate = false;
};

/// Effective sample size per coordinate from FFT autocovariances, truncated with
/// Geyer's initial positive sequence and clamped to [1, N]. Requires N >= 10.
EssResult effective_sample_size(const Matrix& samples);

struct ReferencePosterior {
  Matrix samples;
  Vector mean;
  Vector var;
  std::string method = "rwm";
  std::uint64_t n_samples = 0;
  std::uint64_t seed = 0;
  std::uint64_t burn_in = 0;
};

/// Long adaptive random-walk run started at the origin; the first `burn_in` states
/// are discarded and n states are kept.
ReferencePosterior build_reference(TransformedPotential& tp, std::uint64_t n, std::uint64_t seed,
                                   std::uint64_t burn_in = 5000);

Vector column_mean(const Matrix& samples);
/// Population variance per column.
Vector column_var(const Matrix& samples);

/// Binary-free CSV form: header xi_1..xi_d, one row per sample.
void write_reference_csv(std::ostream& out, const ReferencePosterior& ref);
ReferencePosterior read_reference_csv(std::istream& in);

}  // namespace pdmp
