#include "pdmp/presets.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

namespace pdmp {

namespace {

std::string format_rate(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

struct Builder {
  const PresetOptions& options;
  std::vector<RunConfig> out;

  RunConfig base(Eigen::Index d) const {
    RunConfig c;
    c.problem.d = d;
    c.budget = options.budget.value_or(default_budget(d));
    for (int s = 0; s < options.seeds; ++s) c.seeds.push_back(static_cast<std::uint64_t>(s));
    return c;
  }

  void add(RunConfig c, const std::string& suffix = "") {
    c.name = to_string(c.method) + "_" + (c.method == Method::rwm || c.method == Method::nuts
                                              ? std::string("none")
                                              : to_string(c.surrogate.effective_kind())) +
             suffix + "_d" + std::to_string(c.problem.d);
    c.finalize();
    out.push_back(std::move(c));
  }

  void pdmp(Eigen::Index d, Method m, SurrogateKind kind, double beta, const std::string& suffix = "",
            int n0 = 0, double lambda_ref = 0.1) {
    RunConfig c = base(d);
    c.method = m;
    c.surrogate.kind = kind;
    c.surrogate.n0 = n0;
    c.beta = beta;
    c.lambda_ref = lambda_ref;
    add(std::move(c), suffix);
  }

  void mcmc(Eigen::Index d, Method m) {
    RunConfig c = base(d);
    c.method = m;
    add(std::move(c));
  }
};

}  // namespace

std::vector<std::string> preset_names() {
  return {"fig-when-converge", "fig-surrogates", "fig-adaptive", "fig-comparison", "appendix-a", "appendix-b"};
}

bool is_preset(const std::string& name) {
  const auto names = preset_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

std::vector<RunConfig> preset(const std::string& name, const PresetOptions& options) {
  if (!is_preset(name)) throw std::invalid_argument("unknown preset: " + name);
  if (options.seeds < 1) throw std::invalid_argument("preset: need at least one seed");
  Builder b{options, {}};
  for (Eigen::Index d : options.dims) {
    if (name == "fig-when-converge") {
      b.pdmp(d, Method::zigzag, SurrogateKind::constant, 2e-2, "_shrink");
      b.pdmp(d, Method::zigzag, SurrogateKind::constant, 0.0, "_noshrink");
      b.pdmp(d, Method::zigzag, SurrogateKind::random_gradient, 2e-2, "_shrink");
      b.mcmc(d, Method::rwm);
    } else if (name == "fig-surrogates") {
      for (auto k : {SurrogateKind::constant, SurrogateKind::laplace, SurrogateKind::gp, SurrogateKind::grad_gp}) {
        b.pdmp(d, Method::zigzag, k, 2e-2);
      }
      b.mcmc(d, Method::rwm);
    } else if (name == "fig-adaptive") {
      b.pdmp(d, Method::zigzag, SurrogateKind::gp, 2e-2);
      b.pdmp(d, Method::zigzag, SurrogateKind::adaptive_gp, 2e-2);
      b.mcmc(d, Method::rwm);
    } else if (name == "fig-comparison") {
      b.pdmp(d, Method::zigzag, SurrogateKind::gp, 2e-2);
      b.pdmp(d, Method::bps, SurrogateKind::gp, 2e-2, "", 0, 0.1);
      b.mcmc(d, Method::nuts);
    } else if (name == "appendix-a") {
      for (double beta : {2e-3, 2e-2, 2e-1, 2.0, 20.0}) {
        const std::string tag = "_beta" + format_rate(beta);
        b.pdmp(d, Method::zigzag, SurrogateKind::constant, beta, tag);
        b.pdmp(d, Method::zigzag, SurrogateKind::laplace, beta, tag);
        b.pdmp(d, Method::zigzag, SurrogateKind::gp, beta, "25" + tag, static_cast<int>(25 * d));
        b.pdmp(d, Method::zigzag, SurrogateKind::gp, beta, "100" + tag, static_cast<int>(100 * d));
      }
    } else {
      for (double rate : {1e-3, 1e-2, 1e-1, 1.0}) {
        b.pdmp(d, Method::bps, SurrogateKind::gp, 2e-2, "_ref" + format_rate(rate), 0, rate);
      }
    }
  }
  return b.out;
}

}  // namespace pdmp
