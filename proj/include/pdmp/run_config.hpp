#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pdmp/bar_problem.hpp"
#include "pdmp/surrogate.hpp"

namespace pdmp {

enum class Method { zigzag, bps, rwm, nuts };

std::string to_string(Method m);
Method parse_method(const std::string& name);

struct ProblemConfig {
  Eigen::Index d = 2;
  std::uint64_t data_seed = 0;
  double sigma_obs = 0.025;
  PriorSpec prior;  // prior.dimension follows d
};

struct SurrogateConfig {
  SurrogateKind kind = SurrogateKind::laplace;
  /// GP training points; 0 means 25 per dimension.
  int n0 = 0;
  bool include_gradients = false;
  bool adaptive = false;

  /// Kind after applying the gradient/adaptive flags.
  SurrogateKind effective_kind() const;
  int effective_n0(Eigen::Index d) const { return n0 > 0 ? n0 : static_cast<int>(25 * d); }
};

struct ReferenceConfig {
  /// CSV written by the `reference` command; generated on the fly when empty.
  std::string path;
  std::uint64_t n = 1000000;
  std::uint64_t seed = 0x7e7e;
};

struct RunConfig {
  std::string name;
  ProblemConfig problem;
  Method method = Method::zigzag;
  SurrogateConfig surrogate;
  double beta = 2e-2;
  double lambda_ref = 0.1;
  std::uint64_t budget = 2000;
  /// Evaluation counts at which metrics are taken; log-spaced default when empty.
  std::vector<std::uint64_t> checkpoints;
  std::vector<std::uint64_t> seeds;
  ReferenceConfig reference;
  /// The Sinkhorn metric is quadratic in the sample count, so it is opt-in.
  bool wasserstein = false;
  int wasserstein_resamples = 10;

  /// Fills defaults (checkpoints, seeds, name) and throws std::invalid_argument on
  /// inconsistent settings.
  void finalize();
  /// Label used for the surrogate column: the kind, or "none" for MCMC baselines.
  std::string surrogate_label() const;
};

/// Default budget per dimension: 2000 (d=2), 5000 (d=5), 10000 (d=10), 1000 d otherwise.
std::uint64_t default_budget(Eigen::Index d);

/// `count` log-spaced integer evaluation counts from `first` to `budget` inclusive.
std::vector<std::uint64_t> log_checkpoints(std::uint64_t first, std::uint64_t budget, int count = 20);

std::string to_json(const RunConfig& c);
RunConfig run_config_from_json(const std::string& text);
/// A file may hold a single config object or an array of them.
std::vector<RunConfig> run_configs_from_json(const std::string& text);

/// FNV-1a hash of the canonical JSON form.
std::string config_hash(const RunConfig& c);

}  // namespace pdmp
