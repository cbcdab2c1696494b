#include <cmath>
#include <memory>
#include <sstream>

#include <gtest/gtest.h>

#include "pdmp/errors.hpp"
#include "pdmp/metrics.hpp"
#include "pdmp/rng.hpp"

using namespace pdmp;

namespace {

Matrix normal_samples(Rng& rng, Eigen::Index n, Eigen::Index d, double shift = 0.0) {
  Matrix m(n, d);
  for (Eigen::Index i = 0; i < n; ++i) m.row(i) = rng.normal_vector(d).transpose().array() + shift;
  return m;
}

Matrix ar1(Rng& rng, Eigen::Index n, double phi) {
  Matrix m(n, 1);
  double x = rng.normal() / std::sqrt(1.0 - phi * phi);
  for (Eigen::Index i = 0; i < n; ++i) {
    x = phi * x + rng.normal();
    m(i, 0) = x;
  }
  return m;
}

}  // namespace

TEST(Rmse, HandValues) {
  EXPECT_EQ(rmse(Vector::Ones(3), Vector::Ones(3)), 0.0);
  EXPECT_NEAR(rmse_mean(Eigen::Vector2d(3.0, 4.0), Eigen::Vector2d(0.0, 0.0)), std::sqrt(12.5), 1e-15);
  EXPECT_NEAR(rmse_var(Vector::Constant(1, 1.5), Vector::Constant(1, 1.0)), 0.5, 1e-15);
  EXPECT_EQ(rmse(Eigen::Vector3d(1, 2, 3), Eigen::Vector3d(0, 0, 1)), rmse(Eigen::Vector3d(3, 1, 2), Eigen::Vector3d(1, 0, 0)));
  EXPECT_THROW(rmse(Vector::Ones(2), Vector::Ones(3)), std::invalid_argument);
}

TEST(Sinkhorn, SelfDivergenceVanishes) {
  Rng rng(1);
  for (Eigen::Index d : {1, 2, 5}) {
    const Matrix a = normal_samples(rng, 300, d);
    EXPECT_LE(std::abs(sinkhorn_divergence(a, a)), 1e-6);
  }
}

TEST(Sinkhorn, DiracsGiveSquaredDistance) {
  const Matrix x = Eigen::RowVector2d(0.3, -1.0);
  const Matrix y = Eigen::RowVector2d(1.0, 0.5);
  const double want = (x - y).squaredNorm();
  EXPECT_NEAR(sinkhorn_divergence(x, y), want, 0.05);
  EXPECT_NEAR(sinkhorn_cost(x, y), want, 1e-12);
}

TEST(Sinkhorn, TranslatedCopyCostsSquaredShift) {
  // For squared-Euclidean cost the debiased divergence between a set and its
  // translate is exactly |m|^2, whatever the regularization.
  Rng rng(2);
  const Matrix a = normal_samples(rng, 400, 2);
  const Eigen::RowVector2d m(0.6, -0.8);
  const Matrix b = a.rowwise() + m;
  EXPECT_NEAR(sinkhorn_divergence(a, b), m.squaredNorm(), 1e-4);
}

TEST(Sinkhorn, GaussianShiftNearClosedForm) {
  Rng rng(3);
  const Matrix a = normal_samples(rng, 2000, 1), b = normal_samples(rng, 2000, 1, 1.0);
  EXPECT_NEAR(sinkhorn_divergence(a, b), 1.0, 0.2);
}

TEST(Sinkhorn, Symmetric) {
  Rng rng(4);
  const Matrix a = normal_samples(rng, 200, 2), b = normal_samples(rng, 150, 2, 0.5);
  EXPECT_NEAR(sinkhorn_divergence(a, b), sinkhorn_divergence(b, a), 1e-8);
}

TEST(Sinkhorn, MatchesDenseLogDomainIterations) {
  // Plain alternating log-domain Sinkhorn over the full kernel, run far past convergence.
  Rng rng(13);
  const Matrix a = normal_samples(rng, 70, 2), b = normal_samples(rng, 50, 2, 0.4);
  const double eps = 0.3;
  auto softmin = [&](const Matrix& x, const Matrix& y, const Eigen::ArrayXd& h) {
    Eigen::ArrayXd out(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const Eigen::ArrayXd t = (h - (y.rowwise() - x.row(i)).rowwise().squaredNorm().array()) / eps;
      const double mx = t.maxCoeff();
      out[i] = -eps * (mx + std::log((t - mx).exp().mean()));
    }
    return out;
  };
  Eigen::ArrayXd f = Eigen::ArrayXd::Zero(a.rows()), g = Eigen::ArrayXd::Zero(b.rows());
  for (int it = 0; it < 5000; ++it) {
    f = softmin(a, b, g);
    g = softmin(b, a, f);
  }
  SinkhornOptions o;
  o.epsilon = eps;
  o.tolerance = 1e-10;
  EXPECT_NEAR(sinkhorn_cost(a, b, o), f.mean() + g.mean(), 1e-9);
}

TEST(Sinkhorn, ConvergesOnWellSeparatedPoints) {
  // Nearest neighbours far apart relative to eps: the plan is close to a permutation.
  Rng rng(14);
  const Matrix a = normal_samples(rng, 200, 5), b = normal_samples(rng, 200, 5, 0.5);
  const double s = sinkhorn_divergence(a, b);
  EXPECT_TRUE(std::isfinite(s));
  EXPECT_GT(s, 5 * 0.25);
}

TEST(Sinkhorn, CapCarriesResidual) {
  Rng rng(5);
  const Matrix a = normal_samples(rng, 100, 2), b = normal_samples(rng, 100, 2, 1.0);
  SinkhornOptions o;
  o.max_iterations = 1;
  o.tolerance = 1e-15;
  try {
    sinkhorn_cost(a, b, o);
    FAIL() << "expected ConvergenceError";
  } catch (const ConvergenceError& e) {
    EXPECT_GT(e.residual(), 0.0);
  }
  EXPECT_THROW(sinkhorn_divergence(Matrix(0, 2), b), std::invalid_argument);
  EXPECT_THROW(sinkhorn_divergence(a, Matrix::Zero(3, 3)), std::invalid_argument);
}

TEST(Ess, IidChainIsNearN) {
  Rng rng(6);
  const Matrix x = normal_samples(rng, 100000, 2);
  const EssResult r = effective_sample_size(x);
  EXPECT_GE(r.ess / 1e5, 0.8);
  EXPECT_LE(r.ess / 1e5, 1.2);
  EXPECT_FALSE(r.degenerate);
}

TEST(Ess, Ar1MatchesIntegratedAutocorrelation) {
  Rng rng(7);
  const Matrix x = ar1(rng, 100000, 0.5);
  const double ratio = effective_sample_size(x).ess / 1e5;
  EXPECT_NEAR(ratio, 1.0 / 3.0, 0.25 / 3.0);
}

TEST(Ess, RepeatedPairsHalve) {
  Rng rng(8);
  Matrix x(20000, 1);
  for (Eigen::Index i = 0; i < 10000; ++i) x(2 * i, 0) = x(2 * i + 1, 0) = rng.normal();
  EXPECT_NEAR(effective_sample_size(x).ess / 20000.0, 0.5, 0.125);
}

TEST(Ess, ConstantChainIsDegenerate) {
  const EssResult r = effective_sample_size(Matrix::Constant(50, 2, 3.0));
  EXPECT_TRUE(r.degenerate);
  EXPECT_EQ(r.ess, 1.0);
  EXPECT_THROW(effective_sample_size(Matrix::Zero(5, 1)), std::invalid_argument);
}

TEST(Ess, AlwaysWithinBounds) {
  Rng rng(9);
  for (double phi : {-0.9, 0.0, 0.9, 0.999}) {
    const EssResult r = effective_sample_size(ar1(rng, 500, phi));
    EXPECT_GE(r.ess, 1.0);
    EXPECT_LE(r.ess, 500.0);
  }
}

TEST(Reference, GaussianTargetMomentsAndConsistency) {
  TransformedPotential tp(GaussianPotential::standard(2), std::make_shared<AffineMap>(AffineMap::identity(2)));
  const ReferencePosterior ref = build_reference(tp, 200000, 11);
  EXPECT_EQ(ref.samples.rows(), 200000);
  EXPECT_LT(ref.mean.cwiseAbs().maxCoeff(), 0.02);
  EXPECT_LT((ref.var.array() - 1.0).abs().maxCoeff(), 0.05);
  EXPECT_EQ(ref.mean, column_mean(ref.samples));
  EXPECT_EQ(ref.var, column_var(ref.samples));
  EXPECT_EQ(ref.burn_in, 5000u);

  TransformedPotential tp2(GaussianPotential::standard(2), std::make_shared<AffineMap>(AffineMap::identity(2)));
  EXPECT_EQ(build_reference(tp2, 200000, 11).samples, ref.samples);
}

TEST(Reference, CsvRoundTripKeepsProvenance) {
  TransformedPotential tp(GaussianPotential::standard(2), std::make_shared<AffineMap>(AffineMap::identity(2)));
  const ReferencePosterior ref = build_reference(tp, 1000, 12, 100);
  std::stringstream ss;
  write_reference_csv(ss, ref);
  EXPECT_EQ(ss.str().rfind("# method=rwm n_samples=1000 seed=12 burn_in=100", 0), 0u);
  const ReferencePosterior back = read_reference_csv(ss);
  EXPECT_EQ(back.samples, ref.samples);
  EXPECT_EQ(back.seed, 12u);
  EXPECT_EQ(back.burn_in, 100u);
  EXPECT_EQ(back.n_samples, 1000u);
}
