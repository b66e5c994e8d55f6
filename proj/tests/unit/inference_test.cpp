#include <gtest/gtest.h>

#include <cmath>

#include "hdqlr/error.hpp"
#include "hdqlr/inference.hpp"
#include "hdqlr/rng.hpp"
#include "oracles.hpp"

namespace hdqlr {
namespace {

struct Instance {
  oracle::Scores scores;
  KernelMoments moments;
};

// Scores with compliance mean `strength`; small strengths give weak identification.
Instance random_instance(int n, double strength, std::uint64_t seed) {
  Rng rng(seed);
  ScoreDecomposition s;
  s.psi_a.resize(n);
  s.psi_b.resize(n);
  for (int i = 0; i < n; ++i) {
    s.psi_a[i] = -strength + 0.9 * rng.normal();
    s.psi_b[i] = strength * 1.0 + rng.normal() + 0.5 * (s.psi_a[i] + strength);
  }
  Instance out;
  out.scores.a.assign(s.psi_a.data(), s.psi_a.data() + n);
  out.scores.b.assign(s.psi_b.data(), s.psi_b.data() + n);
  out.moments = compute_moments(s);
  return out;
}

KernelMoments scaled(const KernelMoments& m, double s) {
  KernelMoments out = m;
  out.mean_a *= s;
  out.mean_b *= s;
  out.c_aa *= s * s;
  out.c_ab *= s * s;
  out.c_bb *= s * s;
  return out;
}

// Moments of psi_b' = psi_b - c psi_a.
KernelMoments shifted(const KernelMoments& m, double c) {
  KernelMoments out = m;
  out.mean_b = m.mean_b - c * m.mean_a;
  out.c_ab = m.c_ab - c * m.c_aa;
  out.c_bb = m.c_bb - 2.0 * c * m.c_ab + c * c * m.c_aa;
  return out;
}

TEST(HProcess, ZeroAtNullAndMatchesNaive) {
  const Instance inst = random_instance(40, 0.3, 1);
  for (double theta0 : {-2.0, 0.5, 3.0}) {
    EXPECT_EQ(h_process(inst.moments, theta0, theta0), 0.0);
    for (double theta : {-4.0, 0.0, 1.0, 6.0}) {
      EXPECT_NEAR(h_process(inst.moments, theta0, theta), oracle::h_naive(inst.scores, theta0, theta), 1e-10);
    }
  }
}

TEST(RStatistic, ExactMatchesDenseOracle) {
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    const Instance inst = random_instance(50, seed % 3 == 0 ? 0.02 : 0.4, seed);
    const oracle::RawSums raw(inst.scores);
    Rng rng(seed + 1000);
    const double theta0 = -2.0 + 4.0 * rng.uniform();
    const double xi = std::sqrt(omega(inst.moments, theta0, theta0)) * rng.normal();
    const double exact = r_statistic(xi, inst.moments, theta0, -5.0, 5.0);
    const double dense = oracle::dense_r_statistic(raw, xi, theta0, -5.0, 5.0, 100001);
    EXPECT_NEAR(exact, dense, 1e-6 * std::max(1.0, std::abs(dense))) << "seed " << seed;
    EXPECT_GE(exact, dense - 1e-9);  // exact infimum is never above a grid minimum
  }
}

TEST(RStatistic, ExactAgreesWithLibraryDenseGrid) {
  const Instance inst = random_instance(50, 0.25, 77);
  const double exact = observed_statistic(inst.moments, 0.3, ThetaGrid::make(-8, 8, 3));
  const double dense = r_statistic(q_hat(inst.moments, 0.3), inst.moments, 0.3, -8.0, 8.0,
                                   InfimumMethod::kDenseGrid, 200001);
  EXPECT_NEAR(exact, dense, 1e-6);
}

TEST(RStatistic, NonNegative) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Instance inst = random_instance(30, 0.1 * static_cast<double>(seed % 5), seed);
    Rng rng(seed);
    for (int j = 0; j < 20; ++j) {
      const double theta0 = -3.0 + 6.0 * rng.uniform();
      const double xi = 3.0 * rng.normal();
      EXPECT_GE(r_statistic(xi, inst.moments, theta0, -3.0, 3.0), 0.0);
    }
  }
}

TEST(RStatistic, ScaleInvariant) {
  const Instance inst = random_instance(60, 0.3, 5);
  const ThetaGrid grid = ThetaGrid::make(-6, 6, 3);
  const double base = observed_statistic(inst.moments, 1.2, grid);
  EXPECT_NEAR(observed_statistic(scaled(inst.moments, 7.5), 1.2, grid), base, 1e-9 * std::max(1.0, base));
  EXPECT_NEAR(observed_statistic(scaled(inst.moments, -0.2), 1.2, grid), base, 1e-9 * std::max(1.0, base));
}

TEST(RStatistic, TranslationEquivariant) {
  const Instance inst = random_instance(60, 0.3, 6);
  const double c = 2.75;
  const double base = observed_statistic(inst.moments, 0.4, ThetaGrid::make(-5, 5, 3));
  const double moved = observed_statistic(shifted(inst.moments, c), 0.4 + c, ThetaGrid::make(-5 + c, 5 + c, 3));
  EXPECT_NEAR(moved, base, 1e-8 * std::max(1.0, base));
}

TEST(RStatistic, RejectsThetaOutsideSetAndDegenerateVariance) {
  const Instance inst = random_instance(30, 0.3, 8);
  EXPECT_THROW(r_statistic(0.1, inst.moments, 9.0, -5.0, 5.0), ConfigError);
  KernelMoments flat = inst.moments;
  flat.c_aa = flat.c_ab = flat.c_bb = 0.0;
  EXPECT_THROW(r_statistic(0.1, flat, 0.0, -5.0, 5.0), DegenerateVarianceError);
  EXPECT_THROW(h_process(flat, 0.0, 1.0), DegenerateVarianceError);
}

TEST(UpperQuantile, OrderStatistic) {
  std::vector<double> v(500);
  for (int i = 0; i < 500; ++i) v[i] = i + 1;
  EXPECT_EQ(upper_quantile(v, 0.05), 475.0);
  EXPECT_EQ(upper_quantile(v, 0.1), 450.0);
  std::vector<double> w(1000);
  for (int i = 0; i < 1000; ++i) w[i] = i + 1;
  EXPECT_EQ(upper_quantile(w, 0.05), 950.0);
}

TEST(CriticalValue, DeterministicAndDrawCountEnforced) {
  const Instance inst = random_instance(40, 0.3, 9);
  const ThetaGrid grid = ThetaGrid::make(-5, 5, 11);
  const double a = critical_value(inst.moments, 0.0, grid, 0.05, 500, 42);
  EXPECT_EQ(a, critical_value(inst.moments, 0.0, grid, 0.05, 500, 42));
  EXPECT_THROW(critical_value(inst.moments, 0.0, grid, 0.05, 99, 42), ConfigError);
  // Strong identification: R is close to a chi-square(1) and c to 3.84.
  const Instance strong = random_instance(400, 3.0, 10);
  const double c = critical_value(strong.moments, 1.0, ThetaGrid::make(-2, 4, 3), 0.05, 20000, 3);
  EXPECT_NEAR(c, 3.8415, 0.25);
}

TEST(Region, DualToPointwiseTests) {
  const Instance inst = random_instance(80, 0.2, 11);
  InferenceConfig cfg;
  cfg.seed = 5;
  const ThetaGrid grid = ThetaGrid::make(-4, 6, 41);
  for (int reps : {1, 3}) {
    std::vector<KernelMoments> ms;
    for (int r = 0; r < reps; ++r) ms.push_back(random_instance(80, 0.2, 11 + r).moments);
    const ConfidenceRegion region = region_from_moments(ms, grid, cfg);
    const auto values = grid.values();
    for (std::size_t g = 0; g < values.size(); ++g) {
      EXPECT_EQ(region.accepted[g], !test_from_moments(ms, values[g], grid, cfg).reject) << g;
    }
  }
}

TEST(Region, AcceptedRuns) {
  const std::vector<double> v{0, 1, 2, 3, 4, 5};
  const auto runs = accepted_runs(v, {false, true, true, false, true, true});
  ASSERT_EQ(runs.size(), 2u);
  EXPECT_EQ(runs[0].lo, 1);
  EXPECT_EQ(runs[0].hi, 2);
  EXPECT_EQ(runs[1].lo, 4);
  EXPECT_EQ(runs[1].hi, 5);
  EXPECT_TRUE(accepted_runs(v, std::vector<bool>(6, false)).empty());
}

TEST(DefaultGrid, CenteredOnEstimate) {
  const Instance inst = random_instance(100, 0.8, 12);
  const ThetaGrid g = default_grid(inst.moments);
  EXPECT_EQ(g.points, 401);
  EXPECT_NEAR(0.5 * (g.lo + g.hi), inst.moments.mean_b / -inst.moments.mean_a, 1e-12);
  KernelMoments weak = inst.moments;
  weak.mean_a = 0.0;
  EXPECT_THROW(default_grid(weak), ConfigError);
}

TEST(ThetaGridTest, ValuesIncludeEndpoints) {
  const auto v = ThetaGrid::make(-9, 11, 401).values();
  EXPECT_EQ(v.front(), -9.0);
  EXPECT_EQ(v.back(), 11.0);
  EXPECT_NEAR(v[200], 1.0, 1e-12);
  EXPECT_THROW(ThetaGrid::make(1, 1, 5), ConfigError);
}

}  // namespace
}  // namespace hdqlr
