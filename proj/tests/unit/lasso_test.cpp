#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "hdqlr/error.hpp"
#include "hdqlr/lasso.hpp"
#include "hdqlr/rng.hpp"
#include "oracles.hpp"

namespace hdqlr {
namespace {

Eigen::MatrixXd normal_matrix(Eigen::Index n, Eigen::Index p, Rng& rng) {
  Eigen::MatrixXd x(n, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) x(i, j) = rng.normal();
  }
  return x;
}

LassoProblem gaussian_problem(Eigen::Index n, Eigen::Index p, double lambda, std::uint64_t seed) {
  Rng rng(seed);
  LassoProblem prob;
  prob.design = normal_matrix(n, p, rng);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  for (Eigen::Index j = 0; j < std::min<Eigen::Index>(p, 3); ++j) beta[j] = 1.0 - 0.4 * j;
  prob.response = prob.design * beta;
  for (Eigen::Index i = 0; i < n; ++i) prob.response[i] += rng.normal();
  prob.lambda = lambda;
  prob.family = Family::kGaussian;
  return prob;
}

LassoProblem binomial_problem(Eigen::Index n, Eigen::Index p, double lambda, std::uint64_t seed) {
  Rng rng(seed);
  LassoProblem prob;
  prob.design = normal_matrix(n, p, rng);
  prob.response.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double eta = 0.8 * prob.design(i, 0) - 0.5 * (p > 1 ? prob.design(i, 1) : 0.0);
    prob.response[i] = rng.uniform() < logistic(eta) ? 1.0 : 0.0;
  }
  prob.lambda = lambda;
  prob.family = Family::kBinomial;
  return prob;
}

TEST(DefaultPenalty, MatchesFormula) {
  EXPECT_NEAR(default_penalty(500, 200, 1.0), 75.8714, 1e-3);
  EXPECT_NEAR(default_penalty(500, 200, 0.5), 0.5 * std::sqrt(500 * std::log(100000.0)), 1e-12);
  EXPECT_THROW(default_penalty(500, 200, 0.0), ConfigError);
}

TEST(LassoOls, OneDimensionalMatchesGridSearch) {
  for (double lambda : {0.0, 3.0, 20.0, 80.0}) {
    LassoProblem prob = gaussian_problem(50, 1, lambda, 21);
    LassoOptions opts;
    opts.standardize = false;
    const LassoSolution sol = solve_lasso_ols(prob, opts);
    ASSERT_TRUE(sol.converged);
    const double n = 50;
    auto objective = [&](double b) {
      return (prob.response - prob.design.col(0) * b).squaredNorm() / n + lambda / n * std::abs(b);
    };
    const double best = oracle::grid_argmin(objective, -3.0, 3.0, 1e-6);
    EXPECT_NEAR(sol.coefficients[0], best, 2e-6) << "lambda " << lambda;
  }
}

TEST(LassoLogit, OneDimensionalMatchesGridSearch) {
  for (double lambda : {1.0, 10.0, 40.0}) {
    LassoProblem prob = binomial_problem(60, 1, lambda, 31);
    LassoOptions opts;
    opts.standardize = false;
    const LassoSolution sol = solve_lasso_logit(prob, opts);
    ASSERT_TRUE(sol.converged);
    const double n = 60;
    auto objective = [&](double b) {
      double loss = 0;
      for (Eigen::Index i = 0; i < prob.design.rows(); ++i) {
        const double eta = prob.design(i, 0) * b;
        loss += std::log1p(std::exp(eta)) - prob.response[i] * eta;
      }
      return loss / n + lambda / n * std::abs(b);
    };
    const double coarse = oracle::grid_argmin(objective, -3.0, 3.0, 1e-3);
    const double best = oracle::grid_argmin(objective, coarse - 2e-3, coarse + 2e-3, 1e-6);
    EXPECT_NEAR(sol.coefficients[0], best, 2e-6) << "lambda " << lambda;
  }
}

TEST(LassoLogit, UnpenalizedMatchesNewton) {
  const LassoProblem prob = binomial_problem(300, 4, 0.0, 41);
  const LassoSolution sol = solve_lasso_logit(prob, {});
  const Eigen::VectorXd ref = oracle::newton_logit(prob.design, prob.response);
  EXPECT_LE((sol.coefficients - ref).cwiseAbs().maxCoeff(), 1e-4);
}

TEST(LassoOls, UnpenalizedMatchesNormalEquations) {
  const LassoProblem prob = gaussian_problem(200, 6, 0.0, 43);
  const LassoSolution sol = solve_lasso_ols(prob, {});
  const Eigen::VectorXd ref =
      (prob.design.transpose() * prob.design).ldlt().solve(prob.design.transpose() * prob.response);
  EXPECT_LE((sol.coefficients - ref).cwiseAbs().maxCoeff(), 1e-5);
}

TEST(Lasso, KktHoldsOnRandomProblems) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    for (bool standardize : {true, false}) {
      LassoOptions opts;
      opts.standardize = standardize;
      const double lambda = default_penalty(120, 60, 0.5);
      const LassoProblem g = gaussian_problem(120, 60, lambda, seed);
      const LassoSolution gs = solve_lasso(g, opts);
      EXPECT_TRUE(gs.converged);
      EXPECT_LE(oracle::kkt_slack(g, opts, gs), 1e-6);
      const LassoProblem b = binomial_problem(120, 60, lambda, seed + 100);
      const LassoSolution bs = solve_lasso(b, opts);
      EXPECT_TRUE(bs.converged);
      EXPECT_LE(oracle::kkt_slack(b, opts, bs), 1e-6);
    }
  }
}

TEST(Lasso, ObjectiveTraceNonIncreasing) {
  LassoOptions opts;
  opts.trace = true;
  for (auto prob : {gaussian_problem(100, 30, 10.0, 5), binomial_problem(100, 30, 10.0, 6)}) {
    const LassoSolution sol = solve_lasso(prob, opts);
    ASSERT_GE(sol.objective_trace.size(), 2u);
    for (std::size_t i = 1; i < sol.objective_trace.size(); ++i) {
      EXPECT_LE(sol.objective_trace[i], sol.objective_trace[i - 1] + 1e-12);
    }
  }
}

TEST(Lasso, PenaltyNormNonIncreasingInLambda) {
  for (Family family : {Family::kGaussian, Family::kBinomial}) {
    LassoProblem prob = family == Family::kGaussian ? gaussian_problem(150, 40, 0, 8)
                                                     : binomial_problem(150, 40, 0, 9);
    const Eigen::VectorXd w = penalty_weights(prob.design, {});
    double previous = std::numeric_limits<double>::infinity();
    for (double lambda : {2.0, 5.0, 10.0, 20.0, 40.0, 80.0}) {
      prob.lambda = lambda;
      const LassoSolution sol = solve_lasso(prob, {});
      const double norm = (w.array() * sol.coefficients.array().abs()).sum();
      EXPECT_LE(norm, previous + 1e-6);
      previous = norm;
    }
  }
}

TEST(Lasso, ColumnPermutationEquivariance) {
  for (LassoProblem prob : {gaussian_problem(100, 12, 8.0, 12), binomial_problem(100, 12, 8.0, 13)}) {
    std::vector<int> perm(12);
    std::iota(perm.begin(), perm.end(), 0);
    std::reverse(perm.begin(), perm.end());
    std::swap(perm[2], perm[7]);
    LassoProblem permuted = prob;
    for (int j = 0; j < 12; ++j) permuted.design.col(j) = prob.design.col(perm[j]);
    const LassoSolution a = solve_lasso(prob, {});
    const LassoSolution b = solve_lasso(permuted, {});
    for (int j = 0; j < 12; ++j) EXPECT_NEAR(b.coefficients[j], a.coefficients[perm[j]], 1e-5);
  }
}

TEST(Lasso, StandardizedColumnScaling) {
  LassoProblem prob = gaussian_problem(100, 8, 8.0, 14);
  LassoProblem scaled = prob;
  scaled.design.col(0) *= 10.0;
  scaled.design.col(3) *= 0.1;
  const LassoSolution a = solve_lasso(prob, {});
  const LassoSolution b = solve_lasso(scaled, {});
  EXPECT_NEAR(b.coefficients[0] * 10.0, a.coefficients[0], 1e-5);
  EXPECT_NEAR(b.coefficients[3] * 0.1, a.coefficients[3], 1e-5);
  EXPECT_NEAR(b.coefficients[5], a.coefficients[5], 1e-5);
}

TEST(Lasso, LargePenaltyGivesZero) {
  const LassoProblem prob = gaussian_problem(80, 10, 1e6, 15);
  EXPECT_EQ(solve_lasso(prob, {}).support_size(), 0u);
}

TEST(LassoLogit, SeparationAtZeroPenalty) {
  LassoProblem prob;
  prob.design.resize(20, 1);
  prob.response.resize(20);
  for (int i = 0; i < 20; ++i) {
    prob.design(i, 0) = i - 9.5;
    prob.response[i] = i >= 10;
  }
  prob.family = Family::kBinomial;
  EXPECT_THROW(solve_lasso_logit(prob, {}), SeparationError);
}

TEST(Lasso, RejectsBadInput) {
  LassoProblem prob = gaussian_problem(20, 2, -1.0, 1);
  EXPECT_THROW(solve_lasso(prob, {}), ConfigError);
  prob = binomial_problem(20, 2, 1.0, 1);
  prob.response[0] = 0.5;
  EXPECT_THROW(solve_lasso(prob, {}), ConfigError);
}

TEST(LogitMle, MatchesNewtonOracle) {
  const LassoProblem prob = binomial_problem(400, 5, 0.0, 17);
  Eigen::MatrixXd design(400, 6);
  design << Eigen::VectorXd::Ones(400), prob.design;
  const MleFit fit = fit_logit_mle(design, prob.response);
  EXPECT_TRUE(fit.converged);
  EXPECT_FALSE(fit.separated);
  EXPECT_LE((fit.coefficients - oracle::newton_logit(design, prob.response)).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(LogitMle, RankDeficientThrows) {
  Eigen::MatrixXd design(10, 2);
  design.col(0).setOnes();
  design.col(1).setConstant(2.0);
  EXPECT_THROW(fit_logit_mle(design, Eigen::VectorXd::Zero(10)), SingularFitError);
}

TEST(Ols, MatchesNormalEquationsAndRejectsRankDeficiency) {
  Rng rng(3);
  const Eigen::MatrixXd x = normal_matrix(50, 4, rng);
  const Eigen::VectorXd y = normal_matrix(50, 1, rng).col(0);
  const Eigen::VectorXd ref = (x.transpose() * x).ldlt().solve(x.transpose() * y);
  EXPECT_LE((fit_ols(x, y) - ref).cwiseAbs().maxCoeff(), 1e-10);
  Eigen::MatrixXd bad = x;
  bad.col(3) = bad.col(0) + bad.col(1);
  EXPECT_THROW(fit_ols(bad, y), SingularFitError);
  EXPECT_THROW(fit_ols(normal_matrix(3, 4, rng), y.head(3)), SingularFitError);
}

}  // namespace
}  // namespace hdqlr
