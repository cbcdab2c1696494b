#include <algorithm>
#include <complex>
#include <stdexcept>
#include <unsupported/Eigen/FFT>
#include <vector>

#include "pdmp/metrics.hpp"

namespace pdmp {

namespace {

// Autocovariance at lags 0..n-1 (biased, divided by n) via zero-padded FFT.
std::vector<double> autocovariance(const Vector& x) {
  const std::size_t n = static_cast<std::size_t>(x.size());
  std::size_t len = 1;
  while (len < 2 * n) len <<= 1;
  const double mean = x.mean();
  std::vector<double> padded(len, 0.0);
  for (std::size_t i = 0; i < n; ++i) padded[i] = x[static_cast<Eigen::Index>(i)] - mean;
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spec;
  fft.fwd(spec, padded);
  for (auto& c : spec) c = std::complex<double>(std::norm(c), 0.0);
  std::vector<double> acov;
  fft.inv(acov, spec);
  acov.resize(n);
  for (auto& a : acov) a /= static_cast<double>(n);
  return acov;
}

double ess_1d(const Vector& x, bool& degenerate) {
  const auto n = static_cast<double>(x.size());
  const auto acov = autocovariance(x);
  const double scale = x.cwiseAbs().maxCoeff();
  if (!(acov[0] > 1e-24 * scale * scale) || acov[0] == 0.0) {
    degenerate = true;
    return 1.0;
  }
  // Geyer: sum pairs Gamma_k = rho_2k + rho_2k+1 while positive.
  // tau = -1 + 2 sum_k Gamma_k, Gamma_0 = 1 + rho_1
  double sum = 0.0;
  const std::size_t lags = acov.size();
  double tau = -1.0;
  for (std::size_t k = 0; 2 * k + 1 < lags; ++k) {
    const double gamma = (acov[2 * k] + acov[2 * k + 1]) / acov[0];
    if (!(gamma > 0.0)) break;
    sum += gamma;
  }
  tau += 2.0 * sum;
  const double ess = n / std::max(tau, 1e-12);
  return std::clamp(ess, 1.0, n);
}

}  // namespace

EssResult effective_sample_size(const Matrix& samples) {
  if (samples.rows() < 10) throw std::invalid_argument("effective_sample_size: need at least 10 samples");
  EssResult r;
  r.per_coordinate.resize(samples.cols());
  for (Eigen::Index j = 0; j < samples.cols(); ++j) {
    bool degenerate = false;
    r.per_coordinate[j] = ess_1d(samples.col(j), degenerate);
    r.degenerate = r.degenerate || degenerate;
  }
  r.ess = r.per_coordinate.minCoeff();
  return r;
}

}  // namespace pdmp
