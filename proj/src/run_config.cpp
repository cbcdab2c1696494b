#include "pdmp/run_config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "json.hpp"

namespace pdmp {

using nlohmann::json;

std::string to_string(Method m) {
  switch (m) {
    case Method::zigzag: return "zigzag";
    case Method::bps: return "bps";
    case Method::rwm: return "rwm";
    case Method::nuts: return "nuts";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  for (auto m : {Method::zigzag, Method::bps, Method::rwm, Method::nuts}) {
    if (to_string(m) == name) return m;
  }
  throw std::invalid_argument("unknown method: " + name);
}

SurrogateKind SurrogateConfig::effective_kind() const {
  if (kind == SurrogateKind::gp || kind == SurrogateKind::grad_gp || kind == SurrogateKind::adaptive_gp) {
    if (adaptive || kind == SurrogateKind::adaptive_gp) return SurrogateKind::adaptive_gp;
    if (include_gradients || kind == SurrogateKind::grad_gp) return SurrogateKind::grad_gp;
  }
  return kind;
}

std::uint64_t default_budget(Eigen::Index d) {
  if (d <= 2) return 2000;
  if (d <= 5) return 5000;
  if (d <= 10) return 10000;
  return static_cast<std::uint64_t>(1000 * d);
}

std::vector<std::uint64_t> log_checkpoints(std::uint64_t first, std::uint64_t budget, int count) {
  if (budget == 0) throw std::invalid_argument("log_checkpoints: budget must be positive");
  first = std::min(std::max<std::uint64_t>(first, 1), budget);
  std::vector<std::uint64_t> out;
  const double lo = std::log(static_cast<double>(first)), hi = std::log(static_cast<double>(budget));
  for (int k = 0; k < count; ++k) {
    const double frac = count == 1 ? 1.0 : static_cast<double>(k) / (count - 1);
    const auto v = static_cast<std::uint64_t>(std::llround(std::exp(lo + frac * (hi - lo))));
    if (out.empty() || v > out.back()) out.push_back(std::min(v, budget));
  }
  if (out.back() != budget) out.push_back(budget);
  return out;
}

void RunConfig::finalize() {
  if (problem.d < 1) throw std::invalid_argument("RunConfig: d must be >= 1");
  problem.prior.dimension = problem.d;
  problem.prior.validate();
  if (!(problem.sigma_obs > 0.0)) throw std::invalid_argument("RunConfig: sigma_obs must be positive");
  if (!(beta >= 0.0)) throw std::invalid_argument("RunConfig: beta must be non-negative");
  if (!(lambda_ref > 0.0)) throw std::invalid_argument("RunConfig: lambda_ref must be positive");
  if (budget == 0) budget = default_budget(problem.d);
  if (checkpoints.empty()) checkpoints = log_checkpoints(50, budget);
  for (std::size_t k = 0; k < checkpoints.size(); ++k) {
    if (checkpoints[k] > budget || (k > 0 && checkpoints[k] <= checkpoints[k - 1])) {
      throw std::invalid_argument("RunConfig: checkpoints must increase and stay within the budget");
    }
  }
  if (seeds.empty()) {
    for (std::uint64_t s = 0; s < 10; ++s) seeds.push_back(s);
  }
  if (wasserstein_resamples < 1) throw std::invalid_argument("RunConfig: wasserstein_resamples must be >= 1");
  if (name.empty()) {
    name = to_string(method) + "_" + surrogate_label() + "_d" + std::to_string(problem.d);
  }
}

std::string RunConfig::surrogate_label() const {
  if (method == Method::rwm || method == Method::nuts) return "none";
  return to_string(surrogate.effective_kind());
}

std::string to_json(const RunConfig& c) {
  json j;
  j["name"] = c.name;
  j["problem"] = {{"d", c.problem.d},
                  {"data_seed", c.problem.data_seed},
                  {"sigma_obs", c.problem.sigma_obs},
                  {"prior",
                   {{"mean_field", c.problem.prior.mean_field},
                    {"signal_std", c.problem.prior.signal_std},
                    {"length_scale", c.problem.prior.length_scale}}}};
  j["method"] = to_string(c.method);
  j["surrogate"] = {{"kind", to_string(c.surrogate.kind)},
                    {"n0", c.surrogate.n0},
                    {"include_gradients", c.surrogate.include_gradients},
                    {"adaptive", c.surrogate.adaptive}};
  j["beta"] = c.beta;
  j["lambda_ref"] = c.lambda_ref;
  j["budget"] = c.budget;
  j["checkpoints"] = c.checkpoints;
  j["seeds"] = c.seeds;
  j["reference"] = {{"path", c.reference.path}, {"n", c.reference.n}, {"seed", c.reference.seed}};
  j["wasserstein"] = c.wasserstein;
  j["wasserstein_resamples"] = c.wasserstein_resamples;
  return j.dump(2);
}

namespace {

RunConfig from_json_object(const json& j) {
  static const std::vector<std::string> known = {"name", "problem", "method", "surrogate", "beta",
                                                 "lambda_ref", "budget", "checkpoints", "seeds",
                                                 "reference", "wasserstein", "wasserstein_resamples"};
  for (const auto& item : j.items()) {
    if (std::find(known.begin(), known.end(), item.key()) == known.end()) {
      throw std::invalid_argument("RunConfig: unknown key '" + item.key() + "'");
    }
  }
  RunConfig c;
  c.name = j.value("name", std::string());
  if (j.contains("problem")) {
    const json& p = j.at("problem");
    c.problem.d = p.value("d", c.problem.d);
    c.problem.data_seed = p.value("data_seed", c.problem.data_seed);
    c.problem.sigma_obs = p.value("sigma_obs", c.problem.sigma_obs);
    if (p.contains("prior")) {
      const json& pr = p.at("prior");
      c.problem.prior.mean_field = pr.value("mean_field", c.problem.prior.mean_field);
      c.problem.prior.signal_std = pr.value("signal_std", c.problem.prior.signal_std);
      c.problem.prior.length_scale = pr.value("length_scale", c.problem.prior.length_scale);
    }
  }
  c.method = parse_method(j.value("method", std::string("zigzag")));
  if (j.contains("surrogate")) {
    const json& s = j.at("surrogate");
    c.surrogate.kind = parse_surrogate_kind(s.value("kind", std::string("laplace")));
    c.surrogate.n0 = s.value("n0", 0);
    c.surrogate.include_gradients = s.value("include_gradients", false);
    c.surrogate.adaptive = s.value("adaptive", false);
  }
  c.beta = j.value("beta", c.beta);
  c.lambda_ref = j.value("lambda_ref", c.lambda_ref);
  c.budget = j.value("budget", std::uint64_t{0});
  c.checkpoints = j.value("checkpoints", std::vector<std::uint64_t>{});
  c.seeds = j.value("seeds", std::vector<std::uint64_t>{});
  if (j.contains("reference")) {
    const json& r = j.at("reference");
    c.reference.path = r.value("path", std::string());
    c.reference.n = r.value("n", c.reference.n);
    c.reference.seed = r.value("seed", c.reference.seed);
  }
  c.wasserstein = j.value("wasserstein", false);
  c.wasserstein_resamples = j.value("wasserstein_resamples", 10);
  c.finalize();
  return c;
}

}  // namespace

RunConfig run_config_from_json(const std::string& text) { return from_json_object(json::parse(text)); }

std::vector<RunConfig> run_configs_from_json(const std::string& text) {
  const json j = json::parse(text);
  std::vector<RunConfig> out;
  if (j.is_array()) {
    for (const auto& item : j) out.push_back(from_json_object(item));
  } else {
    out.push_back(from_json_object(j));
  }
  return out;
}

std::string config_hash(const RunConfig& c) {
  const std::string text = json::parse(to_json(c)).dump();
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace pdmp
