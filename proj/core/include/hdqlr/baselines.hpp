#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "hdqlr/data.hpp"
#include "hdqlr/inference.hpp"

namespace hdqlr {

enum class Method { kHdqlr, kAm16, kDml, kDmlNoCrossfit };

std::string_view method_name(Method m);
// Accepts hdqlr, am16, dml, dml_nocf. Throws ConfigError otherwise.
Method parse_method(std::string_view name);

/// Point estimate with a normal-approximation interval.
struct DmlEstimate {
  double theta_hat = 0.0;
  double std_error = 0.0;
  Interval ci;
  double alpha = 0.05;
};

// z_{1 - alpha / 2}.
double normal_critical(double alpha);

/// theta_hat = mean(psi_b) / mean(-psi_a), se^2 = mean(psi(theta_hat)^2) / mean(psi_a)^2 / n.
/// Throws WeakDenominatorError when the compliance estimate is numerically zero.
DmlEstimate dml_from_scores(const ScoreDecomposition& scores, double alpha);

/// Cross-fitted DML (crossfit = true, held-out scores) or the no-cross-fitting variant (crossfit = false,
/// full-sample lasso fits scored in-sample). With cfg.reps > 1 the estimate
/// and standard error are averaged over repetitions.
DmlEstimate dml_estimate(const Dataset& ds, bool crossfit, const InferenceConfig& cfg);

// Repetition-averaged estimate from lasso cross-fitting results already computed.
DmlEstimate dml_from_results(const std::vector<CrossfitResult>& results, double alpha);

// Two-sided t-test of theta = theta0 at level est.alpha.
bool dml_rejects(const DmlEstimate& est, double theta0);

// Inference configuration AM16 runs with: unpenalized learners, no cross-fitting, one repetition.
InferenceConfig am16_config(const InferenceConfig& cfg);

/// Conditional QLR test with nuisances fit once on the full sample by maximum
/// likelihood logit and OLS with every covariate. Throws SingularFitError when
/// the design is rank deficient (for instance p >= n).
TestOutcome am16_test(const Dataset& ds, double theta0, const InferenceConfig& cfg);
ConfidenceRegion am16_confidence_interval(const Dataset& ds, const InferenceConfig& cfg);

}  // namespace hdqlr
