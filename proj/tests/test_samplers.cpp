#include <cmath>
#include <memory>

#include <gtest/gtest.h>

#include "pdmp/bar_problem.hpp"
#include "pdmp/pdmp_sampler.hpp"

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

using Runner = PdmpResult (*)(TransformedPotential&, Surrogate&, const Vector&, const PdmpOptions&);

struct Named {
  const char* name;
  Runner run;
};

const Named kSamplers[] = {{"zigzag", &zigzag_run}, {"bps", &bps_run}};

}  // namespace

TEST(PdmpExactSurrogate, LaplaceOnGaussianNeverCorrects) {
  for (const auto& s : kSamplers) {
    for (Eigen::Index d : {1, 2, 5}) {
      TransformedPotential tp = standard_gaussian(d);
      Surrogate laplace = Surrogate::laplace(tp);
      PdmpOptions o;
      o.max_time = 1e3;
      o.seed = 17;
      const PdmpResult r = s.run(tp, laplace, Vector::Constant(d, 0.5), o);
      EXPECT_EQ(r.stats.corrections, 0u) << s.name;
      EXPECT_EQ(r.stats.min_acceptance_ratio, 1.0) << s.name;
      EXPECT_EQ(r.stats.accepted, r.stats.candidates) << s.name;
      EXPECT_GT(r.stats.candidates, 100u);
      EXPECT_EQ(r.skeleton.final_time, 1e3);
    }
  }
}

TEST(PdmpThinning, RatioNeverExceedsOne) {
  for (const auto& s : kSamplers) {
    for (SurrogateKind kind : {SurrogateKind::constant, SurrogateKind::random_gradient, SurrogateKind::laplace,
                               SurrogateKind::gp}) {
      TransformedPotential tp = whitened_bar(2);
      Surrogate sur = kind == SurrogateKind::constant          ? Surrogate::constant(2)
                      : kind == SurrogateKind::random_gradient ? Surrogate::random_gradient(2, 3)
                      : kind == SurrogateKind::laplace         ? Surrogate::laplace(tp)
                                                               : Surrogate::gaussian_process(tp, kind, 50, 3);
      PdmpOptions o;
      o.beta = 2e-2;
      o.max_evaluations = 800;
      o.seed = 5;
      const PdmpResult r = s.run(tp, sur, Vector::Zero(2), o);
      EXPECT_LE(r.stats.max_acceptance_ratio, 1.0 + 1e-12) << s.name << " " << to_string(kind);
      EXPECT_GE(r.stats.min_acceptance_ratio, 0.0);
      EXPECT_FALSE(r.stats.aborted) << r.stats.abort_reason;
    }
  }
}

TEST(PdmpBudget, StopsAtEvaluationBudget) {
  for (const auto& s : kSamplers) {
    TransformedPotential tp = whitened_bar(2);
    Surrogate sur = Surrogate::laplace(tp);
    const std::uint64_t before = tp.evaluations();  // the Laplace fit queries the map point
    PdmpOptions o;
    o.max_evaluations = 300;
    o.seed = 2;
    const PdmpResult r = s.run(tp, sur, Vector::Zero(2), o);
    EXPECT_EQ(r.stats.evaluations, 300u);
    EXPECT_EQ(tp.evaluations(), 300u);
    // Only evaluations made during the run carry a time stamp.
    const auto& times = r.skeleton.evaluation_times;
    ASSERT_EQ(times.size(), 300u - before);
    for (std::size_t k = 1; k < times.size(); ++k) EXPECT_LE(times[k - 1], times[k]);
    EXPECT_LE(times.back(), r.skeleton.final_time);
  }
}

TEST(PdmpDeterminism, SameSeedSameSkeleton) {
  for (const auto& s : kSamplers) {
    PdmpResult runs[2];
    for (auto& run : runs) {
      TransformedPotential tp = whitened_bar(2);
      Surrogate sur = Surrogate::gaussian_process(tp, SurrogateKind::gp, 20, 8);
      PdmpOptions o;
      o.beta = 2e-2;
      o.max_evaluations = 300;
      o.seed = 99;
      run = s.run(tp, sur, Vector::Zero(2), o);
    }
    ASSERT_EQ(runs[0].skeleton.events.size(), runs[1].skeleton.events.size());
    for (std::size_t k = 0; k < runs[0].skeleton.events.size(); ++k) {
      EXPECT_EQ(runs[0].skeleton.events[k].time, runs[1].skeleton.events[k].time);
      EXPECT_EQ(runs[0].skeleton.events[k].position, runs[1].skeleton.events[k].position);
      EXPECT_EQ(runs[0].skeleton.events[k].velocity, runs[1].skeleton.events[k].velocity);
    }
  }
}

TEST(ZigZagInvariants, FlipsOneUnitComponent) {
  TransformedPotential tp = whitened_bar(3);
  Surrogate sur = Surrogate::laplace(tp);
  PdmpOptions o;
  o.max_time = 200.0;
  o.seed = 4;
  const PdmpResult r = zigzag_run(tp, sur, Vector::Zero(3), o);
  const auto& ev = r.skeleton.events;
  for (const auto& e : ev) EXPECT_EQ(e.velocity.cwiseAbs(), Vector::Ones(3));
  for (std::size_t k = 1; k < ev.size(); ++k) {
    ASSERT_EQ(ev[k].kind, EventKind::flip);
    const Vector dv = ev[k].velocity - ev[k - 1].velocity;
    EXPECT_EQ((dv.array() != 0.0).count(), 1);
    EXPECT_NE(dv[ev[k].component], 0.0);
  }
}

TEST(BouncyInvariants, BouncesPreserveSpeedAndRefreshesHappen) {
  TransformedPotential tp = whitened_bar(3);
  Surrogate sur = Surrogate::laplace(tp);
  PdmpOptions o;
  o.max_time = 500.0;
  o.lambda_ref = 0.5;
  o.seed = 4;
  const PdmpResult r = bps_run(tp, sur, Vector::Zero(3), o);
  const auto& ev = r.skeleton.events;
  int refreshes = 0;
  for (std::size_t k = 1; k < ev.size(); ++k) {
    if (ev[k].kind == EventKind::bounce) {
      EXPECT_NEAR(ev[k].velocity.norm(), ev[k - 1].velocity.norm(), 1e-12);
    } else if (ev[k].kind == EventKind::refresh) {
      ++refreshes;
    }
  }
  EXPECT_EQ(static_cast<std::uint64_t>(refreshes), r.stats.refreshes);
  // Poisson(lambda T) refreshes; 250 expected.
  EXPECT_GT(refreshes, 180);
  EXPECT_LT(refreshes, 320);
}

TEST(PdmpOffsets, ConstantSurrogateCorrectsAndStillSamples) {
  TransformedPotential tp = whitened_bar(2);
  Surrogate sur = Surrogate::constant(2);
  PdmpOptions o;
  o.beta = 2e-3;
  o.max_evaluations = 2000;
  o.seed = 1;
  const PdmpResult r = zigzag_run(tp, sur, Vector::Zero(2), o);
  EXPECT_GT(r.stats.corrections, 0u);
  EXPECT_LT(r.stats.max_abs_position, 10.0);
}

TEST(PdmpHorizon, EmptyRayAbortsUnlessTimeLimited) {
  // A zero surrogate with zero offset never proposes a candidate.
  for (const auto& s : kSamplers) {
    TransformedPotential tp = standard_gaussian(2);
    Surrogate sur = Surrogate::constant(2);
    PdmpOptions o;
    o.initial_offset = 0.0;
    o.lambda_ref = 1e-12;
    o.max_evaluations = 100;
    o.seed = 2;
    const PdmpResult open = s.run(tp, sur, Vector::Zero(2), o);
    EXPECT_TRUE(open.stats.aborted) << s.name;
    EXPECT_EQ(open.stats.abort_reason, "no candidate within the ray integration horizon");
    EXPECT_EQ(open.skeleton.final_time, o.max_horizon);

    o.max_time = 50.0;
    const PdmpResult timed = s.run(tp, sur, Vector::Zero(2), o);
    EXPECT_FALSE(timed.stats.aborted) << s.name;
    EXPECT_EQ(timed.skeleton.final_time, 50.0);
  }
}

TEST(PdmpGaussianMoments, GpSurrogateOnLaplaceProxy) {
  // Gaussian proxy of the bar posterior: its own MAP map whitens it to N(0, I).
  PriorSpec spec;
  spec.dimension = 2;
  auto bar = std::make_shared<BarPotential>(project_prior(spec), generate_synthetic(spec, 0).observations);
  const AffineMap bar_map = build_map(*bar, bar->prior().mean);
  const Matrix& L = bar_map.chol_factor();
  auto proxy = std::make_shared<GaussianPotential>(bar_map.map_point(), L * L.transpose());
  auto map = std::make_shared<AffineMap>(build_map(*proxy, proxy->mean()));
  for (const auto& s : kSamplers) {
    TransformedPotential tp(proxy, map);
    Surrogate sur = Surrogate::gaussian_process(tp, SurrogateKind::gp, 50, 21);
    PdmpOptions o;
    o.max_time = 1e4;
    o.seed = 21;
    const PdmpResult r = s.run(tp, sur, Vector::Zero(2), o);
    const Moments m = skeleton_moments(r.skeleton, 0.0);
    // Monte Carlo error of the mean is about 0.015 per coordinate at this horizon, so the
    // bounds sit near five standard errors. The acceptance binary holds the tighter pinned ones.
    EXPECT_LE(m.mean.cwiseAbs().maxCoeff(), 0.08) << s.name;
    EXPECT_LE((m.var.array() - 1.0).abs().maxCoeff(), 0.15) << s.name;
  }
}

TEST(PdmpOptionsValidation, RejectsBadInput) {
  TransformedPotential tp = standard_gaussian(2);
  Surrogate sur = Surrogate::laplace(tp);
  PdmpOptions o;
  o.max_time = 1.0;
  EXPECT_THROW(zigzag_run(tp, sur, Vector::Zero(3), o), std::invalid_argument);
  o.beta = -1.0;
  EXPECT_THROW(bps_run(tp, sur, Vector::Zero(2), o), std::invalid_argument);
}
