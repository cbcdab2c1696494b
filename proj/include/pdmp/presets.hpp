#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pdmp/run_config.hpp"

namespace pdmp {

struct PresetOptions {
  std::vector<Eigen::Index> dims = {2, 5, 10};
  int seeds = 10;
  /// Overrides the per-dimension default budget.
  std::optional<std::uint64_t> budget;
};

std::vector<std::string> preset_names();
bool is_preset(const std::string& name);

/// Named experiment grids: fig-when-converge, fig-surrogates, fig-adaptive,
/// fig-comparison, appendix-a (decay-rate grid) and appendix-b (refresh-rate grid).
/// Throws std::invalid_argument for unknown names.
std::vector<RunConfig> preset(const std::string& name, const PresetOptions& options = {});

}  // namespace pdmp
