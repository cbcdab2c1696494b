#include <cmath>
#include <memory>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "pdmp/baselines.hpp"
#include "pdmp/metrics.hpp"
#include "pdmp/rng.hpp"

using namespace pdmp;

namespace {

TransformedPotential gaussian(Eigen::Index d) {
  return TransformedPotential(GaussianPotential::standard(d), std::make_shared<AffineMap>(AffineMap::identity(d)));
}

}  // namespace

TEST(RwmAdapterTest, DeadBandKeepsCovariance) {
  RwmAdapter a(2);
  for (std::uint64_t it = 1; it <= 100; ++it) a.update(it, it % 100 < 22, Vector::Zero(2));
  EXPECT_EQ(a.covariance(), Matrix::Identity(2, 2));
}

TEST(RwmAdapterTest, TwoRejectingWindowsShrinkByPointEightOne) {
  RwmAdapter a(2);
  for (std::uint64_t it = 1; it <= 200; ++it) a.update(it, false, Vector::Zero(2));
  EXPECT_NEAR(a.covariance()(0, 0), 0.81, 1e-15);
  EXPECT_NEAR(a.covariance()(1, 1), 0.81, 1e-15);
  EXPECT_LT((a.factor() * a.factor().transpose() - a.covariance()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(RwmAdapterTest, AcceptingWindowGrows) {
  RwmAdapter a(1);
  for (std::uint64_t it = 1; it <= 100; ++it) a.update(it, true, Vector::Zero(1));
  EXPECT_NEAR(a.covariance()(0, 0), 1.1, 1e-15);
}

TEST(RwmAdapterTest, SwitchesToScaledEmpiricalCovarianceThenFreezes) {
  Rng rng(1);
  RwmAdapter a(2);
  Matrix states(1000, 2);
  for (std::uint64_t it = 1; it <= 1000; ++it) {
    const Vector s = Vector(rng.normal_vector(2).array() * Eigen::Array2d(1.0, 3.0));
    states.row(static_cast<Eigen::Index>(it - 1)) = s.transpose();
    a.update(it, true, s);
  }
  const Matrix centered = states.rowwise() - states.colwise().mean();
  const Matrix emp = centered.transpose() * centered / 999.0;
  EXPECT_LT((a.covariance() - emp * (2.38 * 2.38 / 2.0)).cwiseAbs().maxCoeff(), 1e-10);
  for (std::uint64_t it = 1001; it <= 2000; ++it) a.update(it, false, Vector::Zero(2));
  const Matrix at_freeze = a.covariance();
  for (std::uint64_t it = 2001; it <= 3000; ++it) a.update(it, false, Vector::Zero(2));
  EXPECT_EQ(a.covariance(), at_freeze);
  EXPECT_TRUE(a.frozen(2001));
  EXPECT_FALSE(a.frozen(2000));
}

TEST(RwmRun, OneEvaluationPerIterationAndGaussianMoments) {
  TransformedPotential tp = gaussian(2);
  RwmOptions o;
  o.iterations = 100000;
  o.seed = 3;
  const Chain c = rwm_run(tp, Vector::Zero(2), o);
  ASSERT_EQ(c.size(), 100000);
  for (std::size_t k = 0; k < c.evaluations.size(); ++k) EXPECT_EQ(c.evaluations[k], k + 2);
  const Matrix tail = c.states.bottomRows(90000);
  EXPECT_LT(column_mean(tail).cwiseAbs().maxCoeff(), 0.05);
  EXPECT_LT((column_var(tail).array() - 1.0).abs().maxCoeff(), 0.08);
}

TEST(RwmRun, RespectsBudget) {
  TransformedPotential tp = gaussian(2);
  RwmOptions o;
  o.iterations = 1000;
  o.max_evaluations = 50;
  const Chain c = rwm_run(tp, Vector::Zero(2), o);
  EXPECT_EQ(tp.evaluations(), 50u);
  EXPECT_EQ(c.size(), 49);
}

TEST(ChainCsv, Format) {
  Chain c;
  c.states = Matrix::Zero(2, 2);
  c.accepted = {true, false};
  c.evaluations = {2, 3};
  std::stringstream ss;
  write_chain_csv(ss, c);
  std::string line;
  std::getline(ss, line);
  EXPECT_EQ(line, "iteration,xi_1,xi_2,accepted,n_evals_cumulative");
  std::getline(ss, line);
  EXPECT_EQ(line, "1,0,0,1,2");
}

TEST(Leapfrog, ReversibleAndNearlyEnergyConserving) {
  TransformedPotential tp = gaussian(3);
  Rng rng(4);
  PhasePoint z;
  z.q = rng.normal_vector(3);
  z.p = rng.normal_vector(3);
  const Evaluation e = tp.evaluate(z.q);
  z.potential = e.value;
  z.grad = e.gradient;
  PhasePoint w = z;
  for (int k = 0; k < 20; ++k) w = leapfrog(tp, w, 0.1);
  const double h0 = z.potential + 0.5 * z.p.squaredNorm();
  const double h1 = w.potential + 0.5 * w.p.squaredNorm();
  EXPECT_LT(std::abs(h1 - h0), 0.02);
  w.p = -w.p;
  for (int k = 0; k < 20; ++k) w = leapfrog(tp, w, 0.1);
  EXPECT_LT((w.q - z.q).norm(), 1e-12);
  EXPECT_LT((w.p + z.p).norm(), 1e-12);
}

TEST(NutsRun, DualAveragingHitsTargetAcceptance) {
  TransformedPotential tp = gaussian(1);
  NutsOptions o;
  o.iterations = 3000;
  o.adapt_iterations = 500;
  o.seed = 5;
  NutsDiagnostics diag;
  const Chain c = nuts_run(tp, Vector::Zero(1), o, &diag);
  EXPECT_NEAR(diag.mean_accept_stat, o.target_accept, 0.1);
  EXPECT_GT(diag.final_step_size, 0.0);
  const Matrix tail = c.states.bottomRows(2000);
  EXPECT_LT(std::abs(column_mean(tail)[0]), 0.1);
  EXPECT_NEAR(column_var(tail)[0], 1.0, 0.15);
}

TEST(NutsRun, EvaluationsMatchLeapfrogSteps) {
  TransformedPotential tp = gaussian(2);
  NutsOptions o;
  o.iterations = 50;
  o.step_size = 0.3;
  o.seed = 6;
  NutsDiagnostics diag;
  const Chain c = nuts_run(tp, Vector::Zero(2), o, &diag);
  ASSERT_EQ(c.size(), 50);
  // With a fixed step every tree of depth j costs 2^j - 1 leapfrog steps at most; a full
  // tree that never terminated early costs exactly that many.
  std::uint64_t prev = 1;
  for (Eigen::Index k = 0; k < c.size(); ++k) {
    const std::uint64_t used = c.evaluations[static_cast<std::size_t>(k)] - prev;
    const int depth = diag.tree_depths[static_cast<std::size_t>(k)];
    EXPECT_GE(used, 1u);
    EXPECT_LE(used, (1u << depth) - 1u);
    prev = c.evaluations[static_cast<std::size_t>(k)];
  }
}

TEST(NutsRun, StopsAtBudget) {
  TransformedPotential tp = gaussian(2);
  NutsOptions o;
  o.iterations = 100000;
  o.max_evaluations = 500;
  const Chain c = nuts_run(tp, Vector::Zero(2), o);
  EXPECT_EQ(tp.evaluations(), 500u);
  EXPECT_EQ(c.evaluations.back(), 500u);
}
