#pragma once

#include <cstdint>
#include <random>

#include "pdmp/types.hpp"

namespace pdmp {

/// Seeded random source shared by all samplers. Identical seeds give identical
/// streams on a given standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  /// Uniform on the open interval (0, 1).
  double uniform();
  double uniform(double lo, double hi);
  double normal();
  Vector normal_vector(Eigen::Index n);
  /// Exp(1) draw, i.e. -log(U).
  double exponential();
  std::uint64_t next_u64() { return engine_(); }
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Deterministic stream splitting: mixes a base seed with a tag.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag);

}  // namespace pdmp
