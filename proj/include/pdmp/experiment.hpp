#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "pdmp/baselines.hpp"
#include "pdmp/metrics.hpp"
#include "pdmp/pdmp_sampler.hpp"
#include "pdmp/run_config.hpp"

namespace pdmp {

/// Everything a comparison shares: data, posterior, whitening map and reference.
struct ProblemSetup {
  SyntheticProblem data;
  std::shared_ptr<const BarPotential> potential;
  std::shared_ptr<const AffineMap> map;
  std::shared_ptr<const ReferencePosterior> reference;
};

/// Synthetic data, posterior and MAP-based whitening for a problem config.
ProblemSetup make_problem(const ProblemConfig& config);

/// Builds each (problem, reference) setup once and hands out shared copies.
class SetupCache {
 public:
  std::shared_ptr<const ProblemSetup> get(const RunConfig& config);

 private:
  std::mutex mutex_;
  std::map<std::string, std::shared_ptr<const ProblemSetup>> setups_;
};

struct CheckpointMetrics {
  std::uint64_t n_eval = 0;
  double rmse_mean = 0.0;
  double rmse_var = 0.0;
  /// NaN when the Sinkhorn metric is disabled.
  double wasserstein = 0.0;
  /// NaN when too few samples are available.
  double ess_per_eval = 0.0;
  Vector ess_per_coordinate;
};

struct SeedDiagnostics {
  std::uint64_t training_evaluations = 0;
  std::uint64_t evaluations = 0;
  std::uint64_t candidates = 0;
  std::uint64_t accepted = 0;
  std::uint64_t corrections = 0;
  std::uint64_t refreshes = 0;
  double max_abs_position = 0.0;
  bool aborted = false;
  std::string abort_reason;
  /// Aborted, or left the region |xi|_inf <= 10 that a whitened posterior never visits.
  bool diverged = false;
  double nuts_step_size = 0.0;
  std::uint64_t nuts_divergences = 0;
  /// Checkpoints whose Sinkhorn solve hit the iteration cap (reported as NaN).
  std::uint64_t wasserstein_failures = 0;
};

struct SeedRecord {
  std::uint64_t seed = 0;
  std::vector<CheckpointMetrics> trace;
  SeedDiagnostics diagnostics;
};

/// Optional raw outputs of a seed run.
struct SeedArtifacts {
  Skeleton skeleton;
  Chain chain;
};

struct AggregatePoint {
  std::uint64_t n_eval = 0;
  int n_seeds = 0;
  double rmse_mean = 0.0;
  double rmse_var = 0.0;
  double wasserstein = 0.0;
  double ess_per_eval = 0.0;
};

struct RunRecord {
  RunConfig config;
  std::string hash;
  std::vector<SeedRecord> seeds;
  std::vector<AggregatePoint> aggregate;
  /// Shared problem data; recorded in the manifest.
  std::shared_ptr<const ProblemSetup> setup;

  bool any_aborted() const;
};

/// One seed of one configuration: surrogate training (charged to the budget), sampling
/// until the budget is spent, metrics at every checkpoint the run reached.
SeedRecord run_seed(const RunConfig& config, const ProblemSetup& setup, std::uint64_t seed,
                    SeedArtifacts* artifacts = nullptr);

/// Arithmetic means over the seeds that reached each checkpoint (NaN entries skipped).
std::vector<AggregatePoint> aggregate(const std::vector<SeedRecord>& seeds);

/// All seeds of one configuration, spread over `threads` workers.
RunRecord run_experiment(const RunConfig& config, SetupCache& cache, int threads = 1);

/// Runs every configuration; writes <name>.csv per config, aggregate.csv and
/// manifest.json into out_dir when it is non-empty.
std::vector<RunRecord> run_sweep(const std::vector<RunConfig>& configs, const std::string& out_dir, int threads,
                                 std::ostream* log = nullptr);

/// method,surrogate,d,seed,N_eval,rmse_mean,rmse_var,wasserstein,ess_per_eval
void write_trace_csv(std::ostream& out, const RunRecord& record, bool header = true);
/// name,method,surrogate,d,N_eval,n_seeds,rmse_mean,rmse_var,wasserstein,ess_per_eval
void write_aggregate_csv(std::ostream& out, const std::vector<RunRecord>& records);
std::string manifest_json(const std::vector<RunRecord>& records);

}  // namespace pdmp
