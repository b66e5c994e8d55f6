#pragma once

#include <string_view>

#include <nlohmann/json.hpp>

#include "hdqlr/baselines.hpp"
#include "hdqlr/crossfit.hpp"
#include "hdqlr/inference.hpp"

namespace hdqlr {

// Result documents. `method` is one of hdqlr, am16, dml, dml_nocf.
nlohmann::json test_to_json(const TestOutcome& outcome, std::string_view method);
nlohmann::json region_to_json(const ConfidenceRegion& region, std::string_view method);
nlohmann::json dml_to_json(const DmlEstimate& estimate, std::string_view method);
nlohmann::json dml_test_to_json(const DmlEstimate& estimate, double theta0, std::string_view method);

// Per-fold support sizes and penalties.
nlohmann::json diagnostics_to_json(const CrossfitResult& result);

nlohmann::json error_to_json(const std::exception& e);

}  // namespace hdqlr
