#include "hdqlr/score.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "hdqlr/error.hpp"
#include "hdqlr/lasso.hpp"

namespace hdqlr {

void NuisanceFit::validate(std::size_t p) const {
  const auto size = static_cast<Eigen::Index>(p);
  if (beta12.size() != size || beta22.size() != size || gamma.size() != size) {
    throw ConfigError("nuisance fit: coefficient vectors must have length p = " + std::to_string(p));
  }
  const bool finite = std::isfinite(beta11) && std::isfinite(beta21) && beta12.allFinite() &&
                      beta22.allFinite() && gamma.allFinite() &&
                      std::isfinite(first_stage_intercept) && std::isfinite(reduced_form_intercept) &&
                      std::isfinite(propensity_intercept);
  if (!finite) throw ConfigError("nuisance fit: non-finite coefficient");
  if (!(clip_epsilon > 0.0 && clip_epsilon < 0.5)) {
    throw ConfigError("nuisance fit: clip_epsilon must lie in (0, 0.5)");
  }
}

ScoreDecomposition evaluate_score(const Dataset& ds, const NuisanceFit& fit,
                                  std::span<const std::size_t> rows) {
  fit.validate(ds.p());
  const auto m = static_cast<Eigen::Index>(rows.size());
  ScoreDecomposition out;
  out.psi_a.resize(m);
  out.psi_b.resize(m);
  out.fold_of.assign(rows.size(), 0);

  const double eps = fit.clip_epsilon;
  for (Eigen::Index r = 0; r < m; ++r) {
    const auto i = static_cast<Eigen::Index>(rows[static_cast<std::size_t>(r)]);
    if (i >= static_cast<Eigen::Index>(ds.n())) throw ConfigError("evaluate_score: row out of range");
    const auto xi = ds.x().row(i);
    const double y = ds.y()[i];
    const double d = ds.d()[i];
    const double z = ds.z()[i];

    const double raw_p = logistic(fit.propensity_intercept + xi.dot(fit.gamma));
    const double p = std::clamp(raw_p, eps, 1.0 - eps);
    if (p != raw_p) ++out.clipped;

    const double index_m = fit.first_stage_intercept + xi.dot(fit.beta12);
    const double m1 = logistic(index_m + fit.beta11);
    const double m0 = logistic(index_m);
    const double g0 = fit.reduced_form_intercept + xi.dot(fit.beta22);
    const double g1 = g0 + fit.beta21;

    const double b = (g1 - g0) + z * (y - g1) / p - (1.0 - z) * (y - g0) / (1.0 - p);
    const double a = -((m1 - m0) + z * (d - m1) / p - (1.0 - z) * (d - m0) / (1.0 - p));
    if (!std::isfinite(a) || !std::isfinite(b)) {
      throw NumericalError("non-finite score at row " + std::to_string(i + 1));
    }
    out.psi_a[r] = a;
    out.psi_b[r] = b;
  }
  return out;
}

ScoreDecomposition evaluate_score(const Dataset& ds, const NuisanceFit& fit) {
  std::vector<std::size_t> rows(ds.n());
  std::iota(rows.begin(), rows.end(), 0);
  return evaluate_score(ds, fit, rows);
}

double late_point_estimand(const ScoreDecomposition& scores) {
  if (scores.size() == 0) throw ConfigError("late_point_estimand: no scores");
  const double denominator = -scores.psi_a.mean();
  if (std::abs(denominator) < kWeakDenominator) {
    throw WeakDenominatorError(
        "compliance-probability estimate is numerically zero; use the HD-QLR confidence region");
  }
  return scores.psi_b.mean() / denominator;
}

double late_point_estimand(const Dataset& ds, const NuisanceFit& fit) {
  return late_point_estimand(evaluate_score(ds, fit));
}

}  // namespace hdqlr
