#include "run_config.hpp"

#include <fstream>
#include <set>
#include <string>

#include "hdqlr/error.hpp"

namespace hdqlr::cli {

int RunConfig::effective_draws() const {
  if (draws) return *draws;
  return paper_scale ? 1000 : 500;
}

int RunConfig::effective_reps(Command command) const {
  if (reps) return *reps;
  switch (command) {
    case Command::kTest: return 1;
    case Command::kCi: return 10;
    case Command::kPower: return paper_scale ? 2500 : 500;
  }
  return 1;
}

InferenceConfig RunConfig::inference(Command command) const {
  InferenceConfig cfg;
  cfg.k = k_folds;
  cfg.alpha = alpha;
  cfg.lambda_scale = lambda_scale;
  cfg.fixed_lambda = lambda;
  cfg.grid = grid;
  cfg.draws = effective_draws();
  // Power replications are separate datasets; each runs one cross-fitting pass.
  cfg.reps = command == Command::kPower ? 1 : effective_reps(command);
  cfg.seed = seed;
  cfg.clip_epsilon = clip_epsilon;
  cfg.validate();
  return cfg;
}

nlohmann::json to_json(const RunConfig& cfg) {
  nlohmann::json doc = {{"method", method_name(cfg.method)},
                        {"k_folds", cfg.k_folds},
                        {"alpha", cfg.alpha},
                        {"lambda_scale", cfg.lambda_scale},
                        {"seed", cfg.seed},
                        {"clip_epsilon", cfg.clip_epsilon},
                        {"paper_scale", cfg.paper_scale}};
  if (cfg.lambda) doc["lambda"] = *cfg.lambda;
  if (cfg.grid) doc["grid"] = {{"lo", cfg.grid->lo}, {"hi", cfg.grid->hi}, {"points", cfg.grid->points}};
  if (cfg.draws) doc["draws"] = *cfg.draws;
  if (cfg.reps) doc["reps"] = *cfg.reps;
  return doc;
}

RunConfig run_config_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("run config must be a JSON object");
  static const std::set<std::string> known{"method", "k_folds", "alpha", "lambda_scale", "lambda", "grid",
                                           "draws", "reps", "seed", "clip_epsilon", "paper_scale"};
  for (const auto& [key, value] : doc.items()) {
    if (!known.count(key)) throw ConfigError("run config: unknown key '" + key + "'");
  }
  RunConfig cfg;
  try {
    if (doc.contains("method")) cfg.method = parse_method(doc.at("method").get<std::string>());
    if (doc.contains("k_folds")) cfg.k_folds = doc.at("k_folds").get<int>();
    if (doc.contains("alpha")) cfg.alpha = doc.at("alpha").get<double>();
    if (doc.contains("lambda_scale")) cfg.lambda_scale = doc.at("lambda_scale").get<double>();
    if (doc.contains("lambda")) cfg.lambda = doc.at("lambda").get<double>();
    if (doc.contains("grid")) {
      const auto& g = doc.at("grid");
      cfg.grid = ThetaGrid::make(g.at("lo").get<double>(), g.at("hi").get<double>(), g.at("points").get<int>());
    }
    if (doc.contains("draws")) cfg.draws = doc.at("draws").get<int>();
    if (doc.contains("reps")) cfg.reps = doc.at("reps").get<int>();
    if (doc.contains("seed")) cfg.seed = doc.at("seed").get<std::uint64_t>();
    if (doc.contains("clip_epsilon")) cfg.clip_epsilon = doc.at("clip_epsilon").get<double>();
    if (doc.contains("paper_scale")) cfg.paper_scale = doc.at("paper_scale").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open run config '" + path.string() + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("run config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return run_config_from_json(doc);
}

}  // namespace hdqlr::cli
