#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "hdqlr/data.hpp"

namespace hdqlr {

/// Nuisance coefficients for one fold:
///   first stage   E[D | Z, X] = L(a_m + beta11 Z + X'beta12)
///   propensity    E[Z | X]    = L(a_p + X'gamma)
///   reduced form  E[Y | Z, X] = a_g + beta21 Z + X'beta22
/// The intercepts a_* are zero unless the unpenalized-intercept switch is on.
struct NuisanceFit {
  double beta11 = 0.0;
  Eigen::VectorXd beta12;
  double beta21 = 0.0;
  Eigen::VectorXd beta22;
  Eigen::VectorXd gamma;
  double first_stage_intercept = 0.0;
  double reduced_form_intercept = 0.0;
  double propensity_intercept = 0.0;
  double clip_epsilon = 0.01;

  // Throws ConfigError if a coefficient is non-finite, sizes disagree with p,
  // or clip_epsilon is outside (0, 0.5).
  void validate(std::size_t p) const;
};

/// psi(theta) = psi_a * theta + psi_b, row by row.
struct ScoreDecomposition {
  Eigen::VectorXd psi_a;
  Eigen::VectorXd psi_b;
  std::vector<int> fold_of;
  // Rows whose fitted propensity was moved to [eps, 1 - eps].
  std::size_t clipped = 0;

  std::size_t size() const { return static_cast<std::size_t>(psi_a.size()); }
  Eigen::VectorXd at(double theta) const { return psi_a * theta + psi_b; }
};

/// Scores for `rows` (in the given order). With p = clip(L(X'gamma)),
/// m1 = L(beta11 + X'beta12), m0 = L(X'beta12), g1 = beta21 + X'beta22,
/// g0 = X'beta22:
///   psi_b = (g1 - g0) + Z (Y - g1) / p - (1 - Z)(Y - g0) / (1 - p)
///   psi_a = -[(m1 - m0) + Z (D - m1) / p - (1 - Z)(D - m0) / (1 - p)]
/// fold_of is filled with 0; callers that cross-fit overwrite it.
ScoreDecomposition evaluate_score(const Dataset& ds, const NuisanceFit& fit,
                                  std::span<const std::size_t> rows);

// All rows.
ScoreDecomposition evaluate_score(const Dataset& ds, const NuisanceFit& fit);

/// mean(psi_b) / mean(-psi_a): intent-to-treat effect over the compliance
/// probability. Throws WeakDenominatorError when |mean(-psi_a)| < 1e-12.
double late_point_estimand(const Dataset& ds, const NuisanceFit& fit);
double late_point_estimand(const ScoreDecomposition& scores);

inline constexpr double kWeakDenominator = 1e-12;

}  // namespace hdqlr
