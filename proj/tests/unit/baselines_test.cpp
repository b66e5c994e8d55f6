#include <gtest/gtest.h>

#include <cmath>

#include "hdqlr/baselines.hpp"
#include "hdqlr/dgp.hpp"
#include "hdqlr/error.hpp"

namespace hdqlr {
namespace {

Dataset identified_sample(std::size_t n, std::size_t p, std::uint64_t seed) {
  DgpConfig cfg = design_preset("strong");
  cfg.n = n;
  cfg.dim_x = p;
  cfg.seed = seed;
  cfg.instrument = InstrumentRule::kIndependent;
  return generate(cfg);
}

TEST(Methods, NamesRoundTrip) {
  for (Method m : {Method::kHdqlr, Method::kAm16, Method::kDml, Method::kDmlNoCrossfit}) {
    EXPECT_EQ(parse_method(method_name(m)), m);
  }
  EXPECT_THROW(parse_method("ols"), ConfigError);
}

TEST(Dml, NormalCritical) {
  EXPECT_NEAR(normal_critical(0.05), 1.959963984540054, 1e-12);
  EXPECT_NEAR(normal_critical(0.10), 1.6448536269514722, 1e-12);
}

TEST(Dml, FromScoresByHand) {
  ScoreDecomposition s;
  s.psi_a = Eigen::Vector4d(-0.5, -0.7, -0.3, -0.5);
  s.psi_b = Eigen::Vector4d(0.6, 0.4, 0.5, 0.9);
  const DmlEstimate e = dml_from_scores(s, 0.05);
  const double theta = 2.4 / 2.0;
  double sq = 0;
  for (int i = 0; i < 4; ++i) sq += std::pow(s.psi_a[i] * theta + s.psi_b[i], 2) / 4;
  EXPECT_NEAR(e.theta_hat, theta, 1e-14);
  EXPECT_NEAR(e.std_error, std::sqrt(sq / 0.25 / 4), 1e-14);
  EXPECT_NEAR(e.ci.hi - e.ci.lo, 2 * 1.959963984540054 * e.std_error, 1e-12);
  EXPECT_TRUE(dml_rejects(e, theta + 3 * e.std_error));
  EXPECT_FALSE(dml_rejects(e, theta + 1.9 * e.std_error));
}

TEST(Dml, CoversTruthOnStrongDesign) {
  const Dataset ds = identified_sample(2000, 10, 1);
  InferenceConfig cfg;
  cfg.seed = 4;
  const DmlEstimate cf = dml_estimate(ds, true, cfg);
  const DmlEstimate nocf = dml_estimate(ds, false, cfg);
  EXPECT_LT(cf.ci.lo, 1.0);
  EXPECT_GT(cf.ci.hi, 1.0);
  EXPECT_NEAR(cf.theta_hat, nocf.theta_hat, 0.2);
}

TEST(Dml, AveragesRepetitions) {
  const Dataset ds = identified_sample(300, 5, 2);
  InferenceConfig cfg;
  cfg.seed = 7;
  cfg.reps = 3;
  CrossfitOptions opts = crossfit_options(cfg);
  const auto runs = repeat_crossfit(ds, opts, 3);
  double theta = 0;
  for (const auto& r : runs) theta += dml_from_scores(r.scores, 0.05).theta_hat / 3;
  EXPECT_NEAR(dml_estimate(ds, true, cfg).theta_hat, theta, 1e-14);
}

TEST(Am16, MatchesUnpenalizedTest) {
  const Dataset ds = identified_sample(400, 5, 3);
  InferenceConfig cfg;
  cfg.grid = ThetaGrid::make(-9, 11, 401);
  cfg.seed = 1;
  const TestOutcome a = am16_test(ds, 1.0, cfg);
  const TestOutcome b = test(ds, 1.0, am16_config(cfg));
  EXPECT_EQ(a.statistic, b.statistic);
  EXPECT_EQ(a.critical_value, b.critical_value);
}

TEST(Am16, FailsWhenCovariatesOutnumberRows) {
  const Dataset ds = identified_sample(100, 150, 4);
  InferenceConfig cfg;
  cfg.grid = ThetaGrid::make(-9, 11, 41);
  EXPECT_THROW(am16_test(ds, 1.0, cfg), SingularFitError);
}

}  // namespace
}  // namespace hdqlr
