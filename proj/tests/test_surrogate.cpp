#include <memory>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "pdmp/bar_problem.hpp"
#include "pdmp/surrogate.hpp"

using namespace pdmp;

namespace {

TransformedPotential standard_gaussian(Eigen::Index d) {
  return TransformedPotential(GaussianPotential::standard(d), std::make_shared<AffineMap>(AffineMap::identity(d)));
}

TransformedPotential whitened_bar(Eigen::Index d) {
  PriorSpec spec;
  spec.dimension = d;
  auto bar = std::make_shared<BarPotential>(project_prior(spec), generate_synthetic(spec, 0).observations);
  auto map = std::make_shared<AffineMap>(build_map(*bar, bar->prior().mean));
  return TransformedPotential(bar, map);
}

}  // namespace

TEST(SurrogateKinds, NamesRoundTrip) {
  for (auto k : {SurrogateKind::constant, SurrogateKind::random_gradient, SurrogateKind::laplace, SurrogateKind::gp,
                 SurrogateKind::grad_gp, SurrogateKind::adaptive_gp}) {
    EXPECT_EQ(parse_surrogate_kind(to_string(k)), k);
  }
  EXPECT_THROW(parse_surrogate_kind("spline"), std::invalid_argument);
}

TEST(SurrogateConstant, ZeroGradientAndNoEvaluations) {
  Surrogate s = Surrogate::constant(3);
  EXPECT_EQ(s.gradient(Vector::Ones(3)), Vector::Zero(3));
  EXPECT_EQ(s.affine_gradient_slope(), 0.0);
}

TEST(SurrogateRandomGradient, RedrawsPerAttemptWithinBox) {
  Surrogate a = Surrogate::random_gradient(4, 7), b = Surrogate::random_gradient(4, 7);
  Vector prev;
  for (int k = 0; k < 10; ++k) {
    a.begin_attempt();
    b.begin_attempt();
    const Vector g = a.gradient(Vector::Zero(4));
    EXPECT_EQ(g, b.gradient(Vector::Ones(4)));
    EXPECT_LE(g.cwiseAbs().maxCoeff(), 0.5);
    if (k > 0) EXPECT_NE(g, prev);
    prev = g;
  }
  EXPECT_EQ(a.affine_gradient_slope(), 0.0);
}

TEST(SurrogateLaplace, QuadraticAndOneEvaluation) {
  TransformedPotential tp = whitened_bar(2);
  Surrogate s = Surrogate::laplace(tp);
  EXPECT_EQ(tp.evaluations(), 1u);
  const Vector xi(Vector::Constant(2, 0.7));
  EXPECT_EQ(s.gradient(xi), xi);
  EXPECT_DOUBLE_EQ(s.value(xi), 0.5 * xi.squaredNorm() + tp.evaluate(Vector::Zero(2)).value);
  EXPECT_EQ(s.affine_gradient_slope(), 1.0);
}

TEST(SurrogateGp, ChargesTrainingEvaluations) {
  for (SurrogateKind kind : {SurrogateKind::gp, SurrogateKind::grad_gp}) {
    TransformedPotential tp = whitened_bar(2);
    Surrogate s = Surrogate::gaussian_process(tp, kind, 20, 3);
    EXPECT_EQ(tp.evaluations(), 21u);
    EXPECT_EQ(s.trained_size(), 20u);
    EXPECT_EQ(s.model()->uses_gradients(), kind == SurrogateKind::grad_gp);
    EXPECT_FALSE(s.affine_gradient_slope().has_value());
  }
}

TEST(SurrogateGp, GradientMatchesFiniteDifferencesOfValue) {
  TransformedPotential tp = whitened_bar(3);
  Surrogate s = Surrogate::gaussian_process(tp, SurrogateKind::gp, 30, 5);
  Rng rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const Vector xi = rng.normal_vector(3);
    const Vector fd = oracle::fd_gradient([&](const Vector& z) { return s.value(z); }, xi);
    EXPECT_LT(oracle::relative_error(s.gradient(xi), fd), 1e-5);
  }
}

TEST(SurrogateGp, ApproximatesBarPosteriorNearMode) {
  TransformedPotential tp = whitened_bar(2);
  Surrogate s = Surrogate::gaussian_process(tp, SurrogateKind::gp, 50, 9);
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const Vector xi = rng.normal_vector(2);
    const Vector truth = tp.evaluate(xi).gradient;
    EXPECT_LT((s.gradient(xi) - truth).norm(), 0.1 * std::max(1.0, truth.norm()));
  }
}

TEST(SurrogateGp, ExactOnGaussianTarget) {
  TransformedPotential tp = standard_gaussian(2);
  Surrogate s = Surrogate::gaussian_process(tp, SurrogateKind::gp, 20, 4);
  const Vector xi(Vector::Constant(2, 0.3));
  EXPECT_LT((s.gradient(xi) - xi).norm(), 1e-6);
}

TEST(SurrogateAdaptive, MilestonesDoubleAndCap) {
  TransformedPotential tp = whitened_bar(2);
  Surrogate s = Surrogate::gaussian_process(tp, SurrogateKind::adaptive_gp, 5, 1);
  EXPECT_EQ(s.milestones(), (std::vector<std::size_t>{10, 20, 40, 80, 160}));
  TransformedPotential tp2 = whitened_bar(2);
  Surrogate capped = Surrogate::gaussian_process(tp2, SurrogateKind::adaptive_gp, 300, 1);
  EXPECT_EQ(capped.milestones(), (std::vector<std::size_t>{600, 1000}));
}

TEST(SurrogateAdaptive, RefitsWhenMilestoneReached) {
  TransformedPotential tp = whitened_bar(2);
  Surrogate s = Surrogate::gaussian_process(tp, SurrogateKind::adaptive_gp, 5, 1);
  Rng rng(3);
  for (int k = 0; k < 4; ++k) {
    const Vector xi = rng.normal_vector(2);
    s.observe(xi, tp.evaluate(xi).value);
    s.observe(xi, tp.evaluate(xi).value);  // duplicates are ignored
  }
  EXPECT_EQ(s.trained_size(), 5u);
  const Vector xi = rng.normal_vector(2);
  s.observe(xi, tp.evaluate(xi).value);
  EXPECT_EQ(s.trained_size(), 10u);
  EXPECT_EQ(s.refit_count(), 1);
}

TEST(SurrogateAdaptive, NonAdaptiveKindsIgnoreObservations) {
  TransformedPotential tp = whitened_bar(2);
  Surrogate s = Surrogate::gaussian_process(tp, SurrogateKind::gp, 5, 1);
  for (int k = 0; k < 20; ++k) s.observe(Vector::Constant(2, 0.1 * k), 1.0);
  EXPECT_EQ(s.trained_size(), 5u);
}
