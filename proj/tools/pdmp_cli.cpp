// Experiment driver: `pdmp run <preset|config.json>` and `pdmp reference <problem.json>`.

#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "pdmp/experiment.hpp"
#include "pdmp/presets.hpp"

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_command(const std::string& target, int seeds, std::uint64_t budget, const std::vector<long>& dims,
                const std::string& out_dir, int threads) {
  std::vector<pdmp::RunConfig> configs;
  if (pdmp::is_preset(target)) {
    pdmp::PresetOptions options;
    if (seeds > 0) options.seeds = seeds;
    if (budget > 0) options.budget = budget;
    if (!dims.empty()) options.dims.assign(dims.begin(), dims.end());
    configs = pdmp::preset(target, options);
  } else {
    configs = pdmp::run_configs_from_json(slurp(target));
    for (auto& c : configs) {
      if (seeds > 0) {
        c.seeds.clear();
        for (int s = 0; s < seeds; ++s) c.seeds.push_back(static_cast<std::uint64_t>(s));
      }
      if (budget > 0) {
        c.budget = budget;
        c.checkpoints.clear();
      }
      c.finalize();
    }
  }
  const auto records = pdmp::run_sweep(configs, out_dir, threads, &std::cerr);
  bool aborted = false;
  for (const auto& r : records) {
    aborted = aborted || r.any_aborted();
    const auto& last = r.aggregate.empty() ? pdmp::AggregatePoint{} : r.aggregate.back();
    std::cout << r.config.name << ": N_eval=" << last.n_eval << " rmse_mean=" << last.rmse_mean
              << " rmse_var=" << last.rmse_var << " ess_per_eval=" << last.ess_per_eval << '\n';
  }
  if (!out_dir.empty()) std::cout << "results written to " << out_dir << '\n';
  return aborted ? 2 : 0;
}

int reference_command(const std::string& problem_file, std::uint64_t n, std::uint64_t seed, const std::string& out) {
  const auto j = nlohmann::json::parse(slurp(problem_file));
  // Accepts a bare problem block or a full run config.
  pdmp::RunConfig config = pdmp::run_config_from_json(
      j.contains("problem") ? j.dump() : nlohmann::json{{"problem", j}}.dump());
  const pdmp::ProblemSetup setup = pdmp::make_problem(config.problem);
  pdmp::TransformedPotential tp(setup.potential, setup.map);
  const auto ref = pdmp::build_reference(tp, n, seed);
  std::ofstream file(out);
  if (!file) throw std::runtime_error("cannot write " + out);
  pdmp::write_reference_csv(file, ref);
  std::cout << "reference: " << n << " samples, mean=" << ref.mean.transpose() << " var=" << ref.var.transpose()
            << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Surrogate-assisted PDMP samplers on the elastic bar inverse problem"};
  app.require_subcommand(1);

  std::string target, out_dir = "results";
  int seeds = 0;
  std::uint64_t budget = 0;
  int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  auto* run = app.add_subcommand("run", "Run a preset sweep or a config file");
  run->add_option("target", target, "Preset name or JSON config file")->required();
  run->add_option("--seeds", seeds, "Number of seeds (0 keeps the configured list)");
  run->add_option("--budget", budget, "Model-evaluation budget (0 keeps the default)");
  run->add_option("--out", out_dir, "Output directory");
  std::vector<long> dims;
  run->add_option("--dims", dims, "Dimensions for preset grids (default 2 5 10)");
  run->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

  std::string problem_file, ref_out = "reference.csv";
  std::uint64_t ref_n = 1000000, ref_seed = 0x7e7e;
  auto* reference = app.add_subcommand("reference", "Generate a reference posterior sample");
  reference->add_option("problem", problem_file, "JSON problem block or run config")->required();
  reference->add_option("--n", ref_n, "Samples kept after burn-in");
  reference->add_option("--seed", ref_seed, "RNG seed");
  reference->add_option("--out", ref_out, "Output CSV");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return run_command(target, seeds, budget, dims, out_dir, threads);
    return reference_command(problem_file, ref_n, ref_seed, ref_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
