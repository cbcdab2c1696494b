#include "pdmp/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "pdmp/errors.hpp"
#include "pdmp/rng.hpp"

namespace pdmp {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kBurnInFraction = 0.05;
constexpr double kDivergenceRadius = 10.0;

std::string setup_key(const RunConfig& c) {
  std::ostringstream k;
  k << std::setprecision(17) << c.problem.d << '|' << c.problem.data_seed << '|' << c.problem.sigma_obs << '|'
    << c.problem.prior.mean_field << '|' << c.problem.prior.signal_std << '|' << c.problem.prior.length_scale << '|'
    << c.reference.path << '|' << c.reference.n << '|' << c.reference.seed;
  return k.str();
}

// Evaluation-index to time map of a PDMP run: time reached once `k` sampler evaluations
// (1-based) were spent.
double time_at(const Skeleton& sk, std::uint64_t k) { return sk.evaluation_times[k - 1]; }

double ess_per_eval(const Matrix& samples, std::uint64_t n_eval, Vector& per_coord) {
  if (samples.rows() < 10) {
    per_coord = Vector::Constant(samples.cols(), kNaN);
    return kNaN;
  }
  const EssResult r = effective_sample_size(samples);
  per_coord = r.per_coordinate / static_cast<double>(n_eval);
  return r.ess / static_cast<double>(n_eval);
}

double wasserstein_metric(const Matrix& samples, const ReferencePosterior& ref, int resamples, std::uint64_t seed) {
  Rng rng(seed);
  const Eigen::Index n = samples.rows();
  const Eigen::Index total = ref.samples.rows();
  double sum = 0.0;
  for (int r = 0; r < resamples; ++r) {
    Matrix draw(n, samples.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
      draw.row(i) = ref.samples.row(static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(total))));
    }
    sum += sinkhorn_divergence(samples, draw);
  }
  return sum / resamples;
}

// MCMC states used at a checkpoint, stretched to exactly n rows for the Sinkhorn metric.
Matrix stretch(const Matrix& states, Eigen::Index n) {
  Matrix out(n, states.cols());
  for (Eigen::Index j = 0; j < n; ++j) out.row(j) = states.row(j * states.rows() / n);
  return out;
}

bool finite_or_nan_free(double v) { return std::isfinite(v); }

}  // namespace

ProblemSetup make_problem(const ProblemConfig& config) {
  PriorSpec spec = config.prior;
  spec.dimension = config.d;
  ProblemSetup s;
  s.data = generate_synthetic(spec, config.data_seed, config.sigma_obs);
  s.potential = std::make_shared<BarPotential>(project_prior(spec), s.data.observations);
  s.map = std::make_shared<AffineMap>(build_map(*s.potential, s.potential->prior().mean));
  return s;
}

std::shared_ptr<const ProblemSetup> SetupCache::get(const RunConfig& config) {
  std::lock_guard<std::mutex> lock(mutex_);
  const std::string key = setup_key(config);
  if (auto it = setups_.find(key); it != setups_.end()) return it->second;
  auto setup = std::make_shared<ProblemSetup>(make_problem(config.problem));
  if (!config.reference.path.empty()) {
    std::ifstream in(config.reference.path);
    if (!in) throw std::runtime_error("cannot open reference file " + config.reference.path);
    auto ref = read_reference_csv(in);
    if (ref.samples.cols() != config.problem.d) throw std::runtime_error("reference dimension mismatch");
    setup->reference = std::make_shared<ReferencePosterior>(std::move(ref));
  } else {
    TransformedPotential tp(setup->potential, setup->map);
    setup->reference = std::make_shared<ReferencePosterior>(build_reference(tp, config.reference.n, config.reference.seed));
  }
  setups_[key] = setup;
  return setup;
}

bool RunRecord::any_aborted() const {
  return std::any_of(seeds.begin(), seeds.end(), [](const SeedRecord& s) { return s.diagnostics.aborted; });
}

SeedRecord run_seed(const RunConfig& config, const ProblemSetup& setup, std::uint64_t seed, SeedArtifacts* artifacts) {
  const Eigen::Index d = config.problem.d;
  const ReferencePosterior& ref = *setup.reference;
  TransformedPotential tp(setup.potential, setup.map);
  Rng init_rng(derive_seed(seed, 2));
  const Vector xi0 = init_rng.normal_vector(d);

  SeedRecord rec;
  rec.seed = seed;
  SeedDiagnostics& diag = rec.diagnostics;

  auto metrics_from = [&](std::uint64_t n_eval, const Vector& mean, const Vector& var, const Matrix& samples,
                          const Matrix& wasserstein_set) {
    CheckpointMetrics m;
    m.n_eval = n_eval;
    m.rmse_mean = rmse_mean(mean, ref.mean);
    m.rmse_var = rmse_var(var, ref.var);
    m.ess_per_eval = ess_per_eval(samples, n_eval, m.ess_per_coordinate);
    m.wasserstein = kNaN;
    if (config.wasserstein) {
      // A Sinkhorn solve that hits its cap leaves this checkpoint's value missing.
      try {
        m.wasserstein = wasserstein_metric(wasserstein_set, ref, config.wasserstein_resamples,
                                           derive_seed(seed, 4 + n_eval));
      } catch (const ConvergenceError&) {
        ++diag.wasserstein_failures;
      }
    }
    rec.trace.push_back(std::move(m));
  };

  if (config.method == Method::zigzag || config.method == Method::bps) {
    const SurrogateKind kind = config.surrogate.effective_kind();
    std::optional<Surrogate> surrogate;
    switch (kind) {
      case SurrogateKind::constant: surrogate.emplace(Surrogate::constant(d)); break;
      case SurrogateKind::random_gradient: surrogate.emplace(Surrogate::random_gradient(d, derive_seed(seed, 3))); break;
      case SurrogateKind::laplace: surrogate.emplace(Surrogate::laplace(tp)); break;
      default:
        surrogate.emplace(Surrogate::gaussian_process(tp, kind, config.surrogate.effective_n0(d), derive_seed(seed, 3)));
    }
    diag.training_evaluations = tp.evaluations();

    PdmpOptions opt;
    opt.beta = config.beta;
    opt.lambda_ref = config.lambda_ref;
    opt.max_evaluations = config.budget;
    opt.seed = derive_seed(seed, 1);
    PdmpResult res = config.method == Method::zigzag ? zigzag_run(tp, *surrogate, xi0, opt)
                                                     : bps_run(tp, *surrogate, xi0, opt);
    const Skeleton& sk = res.skeleton;
    diag.evaluations = tp.evaluations();
    diag.candidates = res.stats.candidates;
    diag.accepted = res.stats.accepted;
    diag.corrections = res.stats.corrections;
    diag.refreshes = res.stats.refreshes;
    diag.max_abs_position = res.stats.max_abs_position;
    diag.aborted = res.stats.aborted;
    diag.abort_reason = res.stats.abort_reason;

    const std::uint64_t trained = diag.training_evaluations;
    const std::uint64_t used = sk.evaluation_times.size();
    for (std::uint64_t n_eval : config.checkpoints) {
      if (n_eval <= trained || n_eval - trained > used) continue;
      const double end = time_at(sk, n_eval - trained);
      const auto burn_evals = static_cast<std::uint64_t>(std::ceil(kBurnInFraction * static_cast<double>(n_eval)));
      const double burn = burn_evals > trained ? time_at(sk, burn_evals - trained) : 0.0;
      if (!(end > burn)) continue;
      const Moments mom = skeleton_moments(sk, burn, end);
      const Matrix samples = discretize(sk, static_cast<Eigen::Index>(n_eval), burn, end);
      metrics_from(n_eval, mom.mean, mom.var, samples, samples);
    }
    if (artifacts) artifacts->skeleton = std::move(res.skeleton);
  } else {
    Chain chain;
    if (config.method == Method::rwm) {
      RwmOptions opt;
      opt.iterations = config.budget;
      opt.seed = derive_seed(seed, 1);
      opt.max_evaluations = config.budget;
      chain = rwm_run(tp, xi0, opt);
    } else {
      NutsOptions opt;
      opt.iterations = config.budget;
      opt.seed = derive_seed(seed, 1);
      opt.max_evaluations = config.budget;
      NutsDiagnostics nd;
      chain = nuts_run(tp, xi0, opt, &nd);
      diag.nuts_step_size = nd.final_step_size;
      diag.nuts_divergences = nd.divergences;
    }
    diag.evaluations = tp.evaluations();
    diag.candidates = static_cast<std::uint64_t>(chain.size());
    diag.accepted = static_cast<std::uint64_t>(std::count(chain.accepted.begin(), chain.accepted.end(), true));
    diag.max_abs_position = chain.size() > 0 ? chain.states.cwiseAbs().maxCoeff() : 0.0;
    for (std::uint64_t n_eval : config.checkpoints) {
      const auto last = std::upper_bound(chain.evaluations.begin(), chain.evaluations.end(), n_eval);
      const auto burn_evals = static_cast<std::uint64_t>(std::ceil(kBurnInFraction * static_cast<double>(n_eval)));
      const auto first = std::upper_bound(chain.evaluations.begin(), chain.evaluations.end(), burn_evals);
      if (last <= first || (last == chain.evaluations.end() && chain.evaluations.back() < n_eval)) continue;
      const Eigen::Index lo = first - chain.evaluations.begin(), hi = last - chain.evaluations.begin();
      const Matrix samples = chain.states.middleRows(lo, hi - lo);
      const Matrix wset = config.wasserstein ? stretch(samples, static_cast<Eigen::Index>(n_eval)) : Matrix();
      metrics_from(n_eval, column_mean(samples), column_var(samples), samples, wset);
    }
    if (artifacts) artifacts->chain = std::move(chain);
  }
  diag.diverged = diag.aborted || diag.max_abs_position > kDivergenceRadius;
  return rec;
}

std::vector<AggregatePoint> aggregate(const std::vector<SeedRecord>& seeds) {
  std::map<std::uint64_t, std::vector<const CheckpointMetrics*>> by_eval;
  for (const auto& s : seeds) {
    for (const auto& m : s.trace) by_eval[m.n_eval].push_back(&m);
  }
  std::vector<AggregatePoint> out;
  for (const auto& [n_eval, items] : by_eval) {
    AggregatePoint p;
    p.n_eval = n_eval;
    p.n_seeds = static_cast<int>(items.size());
    auto mean_of = [&](auto field) {
      double sum = 0.0;
      int count = 0;
      for (const auto* m : items) {
        const double v = m->*field;
        if (finite_or_nan_free(v)) {
          sum += v;
          ++count;
        }
      }
      return count > 0 ? sum / count : kNaN;
    };
    p.rmse_mean = mean_of(&CheckpointMetrics::rmse_mean);
    p.rmse_var = mean_of(&CheckpointMetrics::rmse_var);
    p.wasserstein = mean_of(&CheckpointMetrics::wasserstein);
    p.ess_per_eval = mean_of(&CheckpointMetrics::ess_per_eval);
    out.push_back(p);
  }
  return out;
}

namespace {

// Runs fn(i) for i in [0, n) on up to `threads` workers.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(threads, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

RunRecord run_experiment(const RunConfig& config, SetupCache& cache, int threads) {
  RunRecord rec;
  rec.config = config;
  rec.config.finalize();
  rec.hash = config_hash(rec.config);
  const auto setup = cache.get(rec.config);
  rec.setup = setup;
  rec.seeds.resize(rec.config.seeds.size());
  parallel_for(rec.seeds.size(), threads,
               [&](std::size_t i) { rec.seeds[i] = run_seed(rec.config, *setup, rec.config.seeds[i]); });
  rec.aggregate = aggregate(rec.seeds);
  return rec;
}

std::vector<RunRecord> run_sweep(const std::vector<RunConfig>& configs, const std::string& out_dir, int threads,
                                 std::ostream* log) {
  SetupCache cache;
  std::vector<RunRecord> records(configs.size());
  std::vector<std::pair<std::size_t, std::size_t>> tasks;
  for (std::size_t c = 0; c < configs.size(); ++c) {
    records[c].config = configs[c];
    records[c].config.finalize();
    records[c].hash = config_hash(records[c].config);
    records[c].seeds.resize(records[c].config.seeds.size());
    records[c].setup = cache.get(records[c].config);  // build shared setups up front
    for (std::size_t s = 0; s < records[c].seeds.size(); ++s) tasks.emplace_back(c, s);
  }
  std::mutex log_mutex;
  parallel_for(tasks.size(), threads, [&](std::size_t i) {
    const auto [c, s] = tasks[i];
    const RunConfig& cfg = records[c].config;
    records[c].seeds[s] = run_seed(cfg, *cache.get(cfg), cfg.seeds[s]);
    if (log) {
      std::lock_guard<std::mutex> lock(log_mutex);
      const auto& diag = records[c].seeds[s].diagnostics;
      *log << cfg.name << " seed " << cfg.seeds[s] << ": " << diag.evaluations << " evaluations"
           << (diag.aborted ? " (aborted: " + diag.abort_reason + ")" : std::string()) << '\n';
    }
  });
  for (auto& r : records) r.aggregate = aggregate(r.seeds);

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    for (const auto& r : records) {
      std::ofstream out(std::filesystem::path(out_dir) / (r.config.name + ".csv"));
      write_trace_csv(out, r);
    }
    std::ofstream agg(std::filesystem::path(out_dir) / "aggregate.csv");
    write_aggregate_csv(agg, records);
    std::ofstream manifest(std::filesystem::path(out_dir) / "manifest.json");
    manifest << manifest_json(records) << '\n';
  }
  return records;
}

namespace {

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

void put(std::ostream& out, double v) {
  if (std::isnan(v)) {
    out << "nan";
  } else {
    out << v;
  }
}

}  // namespace

void write_trace_csv(std::ostream& out, const RunRecord& record, bool header) {
  if (header) out << "method,surrogate,d,seed,N_eval,rmse_mean,rmse_var,wasserstein,ess_per_eval\n";
  out << std::setprecision(10);
  const std::string prefix = to_string(record.config.method) + ',' + record.config.surrogate_label() + ',' +
                             std::to_string(record.config.problem.d) + ',';
  for (const auto& s : record.seeds) {
    for (const auto& m : s.trace) {
      out << prefix << s.seed << ',' << m.n_eval << ',';
      put(out, m.rmse_mean);
      out << ',';
      put(out, m.rmse_var);
      out << ',';
      put(out, m.wasserstein);
      out << ',';
      put(out, m.ess_per_eval);
      out << '\n';
    }
  }
}

void write_aggregate_csv(std::ostream& out, const std::vector<RunRecord>& records) {
  out << "name,method,surrogate,d,N_eval,n_seeds,rmse_mean,rmse_var,wasserstein,ess_per_eval\n"
      << std::setprecision(10);
  for (const auto& r : records) {
    for (const auto& p : r.aggregate) {
      out << r.config.name << ',' << to_string(r.config.method) << ',' << r.config.surrogate_label() << ','
          << r.config.problem.d << ',' << p.n_eval << ',' << p.n_seeds << ',';
      put(out, p.rmse_mean);
      out << ',';
      put(out, p.rmse_var);
      out << ',';
      put(out, p.wasserstein);
      out << ',';
      put(out, p.ess_per_eval);
      out << '\n';
    }
  }
}

std::string manifest_json(const std::vector<RunRecord>& records) {
  using nlohmann::json;
  json runs = json::array();
  for (const auto& r : records) {
    json seeds = json::array();
    for (const auto& s : r.seeds) {
      const auto& d = s.diagnostics;
      seeds.push_back({{"seed", s.seed},
                       {"training_evaluations", d.training_evaluations},
                       {"evaluations", d.evaluations},
                       {"candidates", d.candidates},
                       {"accepted", d.accepted},
                       {"corrections", d.corrections},
                       {"refreshes", d.refreshes},
                       {"max_abs_position", d.max_abs_position},
                       {"aborted", d.aborted},
                       {"abort_reason", d.abort_reason},
                       {"diverged", d.diverged},
                       {"nuts_step_size", d.nuts_step_size},
                       {"nuts_divergences", d.nuts_divergences},
                       {"wasserstein_failures", d.wasserstein_failures}});
    }
    json run = {{"name", r.config.name},
                {"config_hash", r.hash},
                {"config", json::parse(to_json(r.config))},
                {"file", r.config.name + ".csv"},
                {"diagnostics", seeds}};
    if (r.setup) {
      const ProblemSetup& p = *r.setup;
      const Matrix& L = p.map->chol_factor();
      json chol = json::array();
      for (Eigen::Index i = 0; i < L.rows(); ++i) chol.push_back(to_std(L.row(i).transpose()));
      json problem = json::parse(synthetic_to_json(p.data));
      problem["map_point"] = to_std(p.map->map_point());
      problem["map_chol"] = chol;
      if (p.reference) {
        problem["reference"] = {{"method", p.reference->method},
                                {"n_samples", p.reference->n_samples},
                                {"seed", p.reference->seed},
                                {"burn_in", p.reference->burn_in},
                                {"mean", to_std(p.reference->mean)},
                                {"var", to_std(p.reference->var)}};
      }
      run["problem"] = problem;
    }
    runs.push_back(run);
  }
  return json{{"runs", runs}}.dump(2);
}

}  // namespace pdmp
