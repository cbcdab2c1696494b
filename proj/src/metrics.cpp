#include "pdmp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "pdmp/baselines.hpp"

namespace pdmp {

double rmse(const Vector& est, const Vector& ref) {
  if (est.size() != ref.size() || est.size() == 0) throw std::invalid_argument("rmse: size mismatch");
  return std::sqrt((est - ref).squaredNorm() / static_cast<double>(est.size()));
}

Vector column_mean(const Matrix& samples) { return samples.colwise().mean().transpose(); }

Vector column_var(const Matrix& samples) {
  const Vector mu = column_mean(samples);
  return (samples.rowwise() - mu.transpose()).array().square().colwise().mean().transpose();
}

ReferencePosterior build_reference(TransformedPotential& tp, std::uint64_t n, std::uint64_t seed,
                                   std::uint64_t burn_in) {
  if (n < 1) throw std::invalid_argument("build_reference: n must be positive");
  RwmOptions options;
  options.iterations = n + burn_in;
  options.seed = seed;
  const Chain chain = rwm_run(tp, Vector::Zero(tp.dimension()), options);
  ReferencePosterior ref;
  ref.samples = chain.states.bottomRows(static_cast<Eigen::Index>(n));
  ref.mean = column_mean(ref.samples);
  ref.var = column_var(ref.samples);
  ref.n_samples = n;
  ref.seed = seed;
  ref.burn_in = burn_in;
  return ref;
}

void write_reference_csv(std::ostream& out, const ReferencePosterior& ref) {
  const Eigen::Index d = ref.samples.cols();
  out << "# method=" << ref.method << " n_samples=" << ref.n_samples << " seed=" << ref.seed
      << " burn_in=" << ref.burn_in << '\n';
  for (Eigen::Index j = 0; j < d; ++j) out << (j ? "," : "") << "xi_" << j + 1;
  out << '\n' << std::setprecision(17);
  for (Eigen::Index i = 0; i < ref.samples.rows(); ++i) {
    for (Eigen::Index j = 0; j < d; ++j) out << (j ? "," : "") << ref.samples(i, j);
    out << '\n';
  }
}

ReferencePosterior read_reference_csv(std::istream& in) {
  ReferencePosterior ref;
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0) throw std::runtime_error("reference csv: missing provenance line");
  std::istringstream meta(line.substr(2));
  std::string item;
  while (meta >> item) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = item.substr(0, eq), value = item.substr(eq + 1);
    if (key == "method") ref.method = value;
    if (key == "n_samples") ref.n_samples = std::stoull(value);
    if (key == "seed") ref.seed = std::stoull(value);
    if (key == "burn_in") ref.burn_in = std::stoull(value);
  }
  if (!std::getline(in, line)) throw std::runtime_error("reference csv: missing header");
  const Eigen::Index d = static_cast<Eigen::Index>(std::count(line.begin(), line.end(), ',')) + 1;
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    Eigen::Index cols = 0;
    while (std::getline(row, cell, ',')) {
      values.push_back(std::stod(cell));
      ++cols;
    }
    if (cols != d) throw std::runtime_error("reference csv: ragged row");
  }
  const Eigen::Index n = static_cast<Eigen::Index>(values.size()) / d;
  ref.samples = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(values.data(), n, d);
  ref.mean = column_mean(ref.samples);
  ref.var = column_var(ref.samples);
  return ref;
}

}  // namespace pdmp
