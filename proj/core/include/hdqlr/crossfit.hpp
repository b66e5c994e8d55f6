#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "hdqlr/data.hpp"
#include "hdqlr/lasso.hpp"
#include "hdqlr/score.hpp"

namespace hdqlr {

/// Sufficient statistics of a score set for the linear score psi(theta) = psi_a theta + psi_b.
/// c_* are population-normalized (divide by n) centered second moments.
struct KernelMoments {
  double mean_a = 0.0;
  double mean_b = 0.0;
  double c_aa = 0.0;
  double c_ab = 0.0;
  double c_bb = 0.0;
  std::size_t n = 0;
};

KernelMoments compute_moments(const ScoreDecomposition& scores);

// Empirical covariance of psi(theta1) and psi(theta2) across rows.
inline double omega(const KernelMoments& m, double theta1, double theta2) {
  return theta1 * theta2 * m.c_aa + (theta1 + theta2) * m.c_ab + m.c_bb;
}

// sqrt(n) * mean(psi(theta)).
double q_hat(const KernelMoments& m, double theta);

enum class NuisanceLearner {
  kLasso,        // l1-penalized logit / least squares (HD-QLR, DML)
  kUnpenalized,  // maximum likelihood logit / OLS with every covariate (AM16)
};

struct CrossfitOptions {
  int k = 3;
  double lambda_scale = 0.5;
  // Overrides scale * sqrt(n log(p n)) for all three fits when set (0 allowed).
  std::optional<double> fixed_lambda;
  std::uint64_t seed = 0;
  NuisanceLearner learner = NuisanceLearner::kLasso;
  // false: fit once on all rows and score in-sample (fold_of == 1, k == 1).
  bool cross_fit = true;
  double clip_epsilon = 0.01;
  LassoOptions lasso;
};

struct FoldDiagnostics {
  int fold = 0;
  std::size_t train_size = 0;
  double lambda = 0.0;
  std::size_t support_first_stage = 0;
  std::size_t support_propensity = 0;
  std::size_t support_reduced_form = 0;
  std::size_t clipped = 0;
  // Unpenalized logit hit fitted probabilities of 0 or 1.
  bool separated = false;
};

struct CrossfitResult {
  ScoreDecomposition scores;
  std::vector<NuisanceFit> fits;
  KernelMoments moments;
  std::uint64_t seed = 0;
  int k = 0;
  std::vector<FoldDiagnostics> diagnostics;
};

/// Fits first stage, propensity and reduced form on `rows` only.
/// Throws ConvergenceError if a lasso fit does not converge.
NuisanceFit fit_nuisances(const Dataset& ds, std::span<const std::size_t> rows,
                          const CrossfitOptions& options, FoldDiagnostics* diagnostics = nullptr);

/// K-fold cross-fitting: nuisances on the complement of each fold, scores on
/// the fold itself, moments pooled over all rows. Errors carry the fold index.
CrossfitResult run_crossfit(const Dataset& ds, const CrossfitOptions& options);

// reps independent runs with seeds options.seed + 1 .. options.seed + reps.
std::vector<CrossfitResult> repeat_crossfit(const Dataset& ds, const CrossfitOptions& options,
                                            int reps);

}  // namespace hdqlr
