#include "hdqlr/json_io.hpp"

#include <string>
#include <typeinfo>

#include "hdqlr/error.hpp"

namespace hdqlr {

namespace {

nlohmann::json intervals_json(const std::vector<Interval>& intervals) {
  auto out = nlohmann::json::array();
  for (const auto& iv : intervals) out.push_back({iv.lo, iv.hi});
  return out;
}

std::string error_kind(const std::exception& e) {
  if (dynamic_cast<const WeakDenominatorError*>(&e)) return "weak_denominator";
  if (dynamic_cast<const DegenerateVarianceError*>(&e)) return "degenerate_variance";
  if (dynamic_cast<const SingularFitError*>(&e)) return "singular_fit";
  if (dynamic_cast<const SeparationError*>(&e)) return "separation";
  if (dynamic_cast<const ConvergenceError*>(&e)) return "convergence";
  if (dynamic_cast<const NumericalError*>(&e)) return "numerical";
  if (dynamic_cast<const ParseError*>(&e)) return "parse";
  if (dynamic_cast<const SchemaError*>(&e)) return "schema";
  if (dynamic_cast<const ValidationError*>(&e)) return "validation";
  if (dynamic_cast<const CapacityError*>(&e)) return "capacity";
  if (dynamic_cast<const ConfigError*>(&e)) return "config";
  if (dynamic_cast<const IoError*>(&e)) return "io";
  return "internal";
}

}  // namespace

nlohmann::json test_to_json(const TestOutcome& outcome, std::string_view method) {
  return {{"method", method},
          {"theta0", outcome.theta0},
          {"statistic", outcome.statistic},
          {"critical_value", outcome.critical_value},
          {"alpha", outcome.alpha},
          {"reject", outcome.reject},
          {"draws", outcome.draws_used},
          {"seed", outcome.seed},
          {"per_rep", {{"statistic", outcome.per_rep_statistic},
                       {"critical_value", outcome.per_rep_critical_value}}}};
}

nlohmann::json region_to_json(const ConfidenceRegion& region, std::string_view method) {
  auto per_rep = nlohmann::json::array();
  for (const auto& runs : region.per_rep) {
    double length = 0.0;
    for (const auto& iv : runs) length += iv.width();
    per_rep.push_back({{"intervals", intervals_json(runs)}, {"length", length}});
  }
  return {{"method", method},
          {"alpha", region.alpha},
          {"intervals", intervals_json(region.intervals)},
          {"length", region.length},
          {"empty", region.empty},
          {"grid", {{"lo", region.grid.lo}, {"hi", region.grid.hi}, {"points", region.grid.points}}},
          {"per_rep", per_rep},
          {"warnings", region.warnings}};
}

nlohmann::json dml_to_json(const DmlEstimate& estimate, std::string_view method) {
  return {{"method", method},
          {"alpha", estimate.alpha},
          {"theta_hat", estimate.theta_hat},
          {"std_error", estimate.std_error},
          {"intervals", nlohmann::json::array({{estimate.ci.lo, estimate.ci.hi}})},
          {"length", estimate.ci.width()},
          {"empty", false}};
}

nlohmann::json dml_test_to_json(const DmlEstimate& estimate, double theta0, std::string_view method) {
  const double t = std::abs(estimate.theta_hat - theta0) / estimate.std_error;
  return {{"method", method},
          {"theta0", theta0},
          {"statistic", t},
          {"critical_value", normal_critical(estimate.alpha)},
          {"alpha", estimate.alpha},
          {"reject", dml_rejects(estimate, theta0)},
          {"theta_hat", estimate.theta_hat},
          {"std_error", estimate.std_error}};
}

nlohmann::json diagnostics_to_json(const CrossfitResult& result) {
  auto folds = nlohmann::json::array();
  for (const auto& d : result.diagnostics) {
    folds.push_back({{"fold", d.fold},
                     {"train_size", d.train_size},
                     {"lambda", d.lambda},
                     {"support", {{"first_stage", d.support_first_stage},
                                  {"propensity", d.support_propensity},
                                  {"reduced_form", d.support_reduced_form}}},
                     {"clipped", d.clipped},
                     {"separated", d.separated}});
  }
  return {{"seed", result.seed}, {"k", result.k}, {"folds", folds}};
}

nlohmann::json error_to_json(const std::exception& e) {
  return {{"error", {{"kind", error_kind(e)}, {"message", e.what()}}}};
}

}  // namespace hdqlr
