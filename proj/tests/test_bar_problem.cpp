#include <cmath>
#include <limits>
#include <memory>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "pdmp/bar_problem.hpp"
#include "pdmp/rng.hpp"

using namespace pdmp;

namespace {

std::shared_ptr<BarPotential> make_bar(Eigen::Index d, std::uint64_t seed = 3) {
  PriorSpec spec;
  spec.dimension = d;
  const SyntheticProblem p = generate_synthetic(spec, seed);
  return std::make_shared<BarPotential>(project_prior(spec), p.observations);
}

}  // namespace

TEST(BarForward, MatchesQuadrature) {
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng.index(10));
    const Vector theta = rng.normal_vector(d).array() + 1.0;
    const double x = rng.uniform();
    EXPECT_NEAR(forward_displacement(theta, x), oracle::displacement_quadrature(theta, x), 1e-8);
  }
}

TEST(BarForward, IncreasingInPositionAndDecreasingInModulus) {
  Rng rng(2);
  const Vector theta = rng.normal_vector(5);
  double prev = forward_displacement(theta, 0.0);
  EXPECT_EQ(prev, 0.0);
  for (int k = 1; k <= 50; ++k) {
    const double u = forward_displacement(theta, k / 50.0);
    EXPECT_GT(u, prev);
    prev = u;
  }
  for (Eigen::Index i = 0; i < 5; ++i) {
    Vector stiffer = theta;
    stiffer[i] += 0.5;
    EXPECT_LT(forward_displacement(stiffer, 1.0), forward_displacement(theta, 1.0));
  }
}

TEST(BarForward, SensitivityMatchesFiniteDifferences) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Vector theta = rng.normal_vector(4);
    const double x = rng.uniform();
    const Vector fd = oracle::fd_gradient([&](const Vector& t) { return forward_displacement(t, x); }, theta);
    EXPECT_LT(oracle::relative_error(forward_sensitivity(theta, x), fd), 1e-8);
  }
}

TEST(BarForward, RejectsPositionsOutsideBar) {
  EXPECT_THROW(forward_displacement(Vector::Zero(2), -0.1), std::invalid_argument);
  EXPECT_THROW(forward_displacement(Vector::Zero(2), 1.1), std::invalid_argument);
}

TEST(BarPrior, CovarianceMatchesQuadrature) {
  for (Eigen::Index d : {1, 2, 5, 10}) {
    PriorSpec spec;
    spec.dimension = d;
    spec.signal_std = 1.3;
    spec.length_scale = 0.2;
    const ProjectedPrior p = project_prior(spec);
    for (Eigen::Index i = 0; i < d; ++i) {
      for (Eigen::Index j = 0; j < d; ++j) {
        EXPECT_NEAR(p.covariance(i, j), oracle::cell_covariance_quadrature(i, j, d, 1.3, 0.2), 1e-6);
      }
    }
    EXPECT_LT((p.chol * p.chol.transpose() - p.covariance).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((p.precision * p.covariance - Matrix::Identity(d, d)).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(BarPrior, CellVarianceFollowsSmallCellExpansion) {
  // Averaging over a cell of width h shrinks the variance by h^2/(12 l^2) - h^4/(120 l^4) + O(h^6).
  PriorSpec spec;
  spec.dimension = 10;
  const ProjectedPrior p = project_prior(spec);
  const double r = 0.1 / spec.length_scale;
  const double want = 1.0 - r * r / 12.0 + std::pow(r, 4) / 120.0;
  for (Eigen::Index i = 0; i < 10; ++i) EXPECT_NEAR(p.covariance(i, i), want, 1e-5);
}

TEST(BarPrior, RejectsBadSpec) {
  PriorSpec spec;
  spec.length_scale = 0.0;
  EXPECT_THROW(project_prior(spec), std::invalid_argument);
}

TEST(BarSensors, CountAndPlacement) {
  EXPECT_EQ(sensor_count(2), 1);
  EXPECT_EQ(sensor_count(5), 3);
  EXPECT_EQ(sensor_count(10), 7);
  const Vector s = sensor_locations(3);
  ASSERT_EQ(s.size(), 3);
  EXPECT_DOUBLE_EQ(s[0], 0.25);
  EXPECT_DOUBLE_EQ(s[1], 0.5);
  EXPECT_DOUBLE_EQ(s[2], 0.75);
}

TEST(BarPotential, GradientAndHessianMatchFiniteDifferences) {
  Rng rng(4);
  for (Eigen::Index d : {2, 5, 10}) {
    const auto bar = make_bar(d);
    for (int trial = 0; trial < 20; ++trial) {
      const Vector theta = bar->prior().mean + 0.5 * rng.normal_vector(d);
      const Evaluation e = bar->evaluate(theta, {true, true});
      const Vector g = oracle::fd_gradient([&](const Vector& t) { return bar->value(t); }, theta);
      EXPECT_LT(oracle::relative_error(e.gradient, g), 1e-5);
      const Matrix H = oracle::fd_jacobian([&](const Vector& t) { return bar->gradient(t); }, theta);
      EXPECT_LT(oracle::relative_error(e.hessian, H), 1e-5);
      EXPECT_LT((e.hessian - e.hessian.transpose()).cwiseAbs().maxCoeff(), 1e-10);
    }
  }
}

TEST(BarPotential, ValueMatchesDefinition) {
  const auto bar = make_bar(5);
  Rng rng(5);
  const Vector theta = rng.normal_vector(5);
  const Observations& obs = bar->observations();
  double misfit = 0.0;
  for (Eigen::Index k = 0; k < obs.size(); ++k) {
    const double r = obs.values[k] - oracle::displacement_quadrature(theta, obs.sensor_locations[k]);
    misfit += r * r;
  }
  const Vector dt = theta - bar->prior().mean;
  const double want = 0.5 * misfit / (obs.noise_std * obs.noise_std) +
                      0.5 * dt.dot(bar->prior().covariance.ldlt().solve(dt));
  EXPECT_NEAR(bar->value(theta), want, 1e-7 * std::abs(want));
}

TEST(BarPotential, SaturatesInsteadOfOverflowing) {
  const auto bar = make_bar(2);
  const Evaluation e = bar->evaluate(Vector::Constant(2, -800.0));
  EXPECT_TRUE(e.saturated);
  EXPECT_EQ(e.value, std::numeric_limits<double>::max());
  EXPECT_TRUE(e.gradient.allFinite());
}

TEST(BarSynthetic, DeterministicAndJsonRoundTrip) {
  PriorSpec spec;
  spec.dimension = 5;
  const SyntheticProblem a = generate_synthetic(spec, 9), b = generate_synthetic(spec, 9);
  EXPECT_EQ(a.theta_star, b.theta_star);
  EXPECT_EQ(a.observations.values, b.observations.values);
  EXPECT_NE(a.theta_star, generate_synthetic(spec, 10).theta_star);
  const SyntheticProblem c = synthetic_from_json(synthetic_to_json(a));
  EXPECT_EQ(c.theta_star, a.theta_star);
  EXPECT_EQ(c.observations.values, a.observations.values);
  EXPECT_EQ(c.observations.sensor_locations, a.observations.sensor_locations);
}

TEST(EvalCounting, RepeatedQueriesAtOnePointCountOnce) {
  CountingPotential p(make_bar(2));
  const Vector x = Vector::Ones(2);
  p.evaluate(x, {false, false});
  p.evaluate(x, {true, false});
  p.evaluate(x, {true, true});
  EXPECT_EQ(p.evaluations(), 1u);
  p.evaluate(Vector::Zero(2));
  p.evaluate(x);
  EXPECT_EQ(p.evaluations(), 3u);
}

TEST(GaussianPotentialTest, GradientAndHessian) {
  Matrix P(2, 2);
  P << 2.0, 0.5, 0.5, 1.0;
  GaussianPotential g(Vector::Ones(2), P);
  const Vector x(Vector::Constant(2, 3.0));
  const Evaluation e = g.evaluate(x, {true, true});
  EXPECT_NEAR(e.value, 0.5 * (x - Vector::Ones(2)).dot(P * (x - Vector::Ones(2))), 1e-14);
  EXPECT_LT((e.gradient - P * (x - Vector::Ones(2))).norm(), 1e-14);
  EXPECT_EQ(e.hessian, P);
}
