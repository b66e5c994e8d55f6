#include "hdqlr/baselines.hpp"

#include <cmath>
#include <string>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "hdqlr/error.hpp"

namespace hdqlr {

std::string_view method_name(Method m) {
  switch (m) {
    case Method::kHdqlr: return "hdqlr";
    case Method::kAm16: return "am16";
    case Method::kDml: return "dml";
    case Method::kDmlNoCrossfit: return "dml_nocf";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  if (name == "hdqlr") return Method::kHdqlr;
  if (name == "am16") return Method::kAm16;
  if (name == "dml") return Method::kDml;
  if (name == "dml_nocf") return Method::kDmlNoCrossfit;
  throw ConfigError("unknown method '" + std::string(name) + "' (hdqlr, am16, dml, dml_nocf)");
}

double normal_critical(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), 1.0 - alpha / 2.0);
}

DmlEstimate dml_from_scores(const ScoreDecomposition& scores, double alpha) {
  DmlEstimate est;
  est.alpha = alpha;
  est.theta_hat = late_point_estimand(scores);
  const double denominator = scores.psi_a.mean();
  const double second_moment = scores.at(est.theta_hat).squaredNorm() / static_cast<double>(scores.size());
  est.std_error = std::sqrt(second_moment / (denominator * denominator) / static_cast<double>(scores.size()));
  if (!(est.std_error > 0.0) || !std::isfinite(est.std_error)) {
    throw NumericalError("DML standard error is not positive and finite");
  }
  const double z = normal_critical(alpha);
  est.ci = {est.theta_hat - z * est.std_error, est.theta_hat + z * est.std_error};
  return est;
}

DmlEstimate dml_estimate(const Dataset& ds, bool crossfit, const InferenceConfig& cfg) {
  InferenceConfig local = cfg;
  local.learner = NuisanceLearner::kLasso;
  local.cross_fit = crossfit;
  local.validate();
  return dml_from_results(repeat_crossfit(ds, crossfit_options(local), crossfit ? cfg.reps : 1), cfg.alpha);
}

DmlEstimate dml_from_results(const std::vector<CrossfitResult>& results, double alpha) {
  if (results.empty()) throw ConfigError("DML: no cross-fitting results");
  DmlEstimate avg;
  avg.alpha = alpha;
  try {
    for (const auto& r : results) {
      const DmlEstimate e = dml_from_scores(r.scores, alpha);
      avg.theta_hat += e.theta_hat;
      avg.std_error += e.std_error;
    }
  } catch (const WeakDenominatorError&) {
    throw WeakDenominatorError(
        "DML: compliance-probability estimate is numerically zero; the t-test is undefined, use hdqlr");
  }
  const double count = static_cast<double>(results.size());
  avg.theta_hat /= count;
  avg.std_error /= count;
  const double z = normal_critical(alpha);
  avg.ci = {avg.theta_hat - z * avg.std_error, avg.theta_hat + z * avg.std_error};
  return avg;
}

bool dml_rejects(const DmlEstimate& est, double theta0) {
  return std::abs(est.theta_hat - theta0) / est.std_error > normal_critical(est.alpha);
}

InferenceConfig am16_config(const InferenceConfig& cfg) {
  InferenceConfig local = cfg;
  local.learner = NuisanceLearner::kUnpenalized;
  local.cross_fit = false;
  local.reps = 1;
  return local;
}

namespace {

void require_full_rank_size(const Dataset& ds) {
  if (ds.n() <= ds.p() + 2) {
    throw SingularFitError("AM16 needs n > p + 2 for unpenalized fits (n = " + std::to_string(ds.n()) +
                           ", p = " + std::to_string(ds.p()) + ")");
  }
}

}  // namespace

TestOutcome am16_test(const Dataset& ds, double theta0, const InferenceConfig& cfg) {
  require_full_rank_size(ds);
  return test(ds, theta0, am16_config(cfg));
}

ConfidenceRegion am16_confidence_interval(const Dataset& ds, const InferenceConfig& cfg) {
  require_full_rank_size(ds);
  return confidence_interval(ds, am16_config(cfg));
}

}  // namespace hdqlr
