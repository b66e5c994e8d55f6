#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include <nlohmann/json.hpp>

#include "hdqlr/baselines.hpp"
#include "hdqlr/inference.hpp"

namespace hdqlr::cli {

enum class Command { kTest, kCi, kPower };

/// Settings shared by test, ci and power. Unset optionals take the command's default.
struct RunConfig {
  Method method = Method::kHdqlr;
  int k_folds = 3;
  double alpha = 0.05;
  double lambda_scale = 0.5;
  std::optional<double> lambda;
  std::optional<ThetaGrid> grid;
  std::optional<int> draws;
  // Cross-fitting repetitions (test, ci) or Monte Carlo replications (power).
  std::optional<int> reps;
  std::uint64_t seed = 0;
  double clip_epsilon = 0.01;
  bool paper_scale = false;

  int effective_draws() const;
  int effective_reps(Command command) const;
  InferenceConfig inference(Command command) const;
};

nlohmann::json to_json(const RunConfig& cfg);
// Throws ConfigError on unknown keys or wrong types.
RunConfig run_config_from_json(const nlohmann::json& doc);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace hdqlr::cli
