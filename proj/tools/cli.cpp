#include "cli.hpp"

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "hdqlr/baselines.hpp"
#include "hdqlr/data.hpp"
#include "hdqlr/dgp.hpp"
#include "hdqlr/error.hpp"
#include "hdqlr/inference.hpp"
#include "hdqlr/json_io.hpp"
#include "run_config.hpp"

namespace hdqlr::cli {

namespace {

struct DgpFlags {
  std::string design;
  std::size_t n = 0;
  std::size_t dim_x = 0;
  double p_at = 0.0;
  double p_nt = 0.0;
  double u = 0.0;
  std::string outcome_rule = "first";
  std::string instrument = "latent";
  CLI::Option* n_opt = nullptr;
  CLI::Option* dim_opt = nullptr;
  CLI::Option* p_at_opt = nullptr;
  CLI::Option* p_nt_opt = nullptr;
  CLI::Option* u_opt = nullptr;

  void attach(CLI::App* app) {
    app->add_option("--design", design, "Preset: strong, weak, unidentified");
    n_opt = app->add_option("--n", n, "Sample size");
    dim_opt = app->add_option("--dim-x", dim_x, "Number of covariates");
    p_at_opt = app->add_option("--p-at", p_at, "Always-taker share");
    p_nt_opt = app->add_option("--p-nt", p_nt, "Never-taker share");
    u_opt = app->add_option("--u", u, "Toeplitz correlation base");
    app->add_option("--outcome-rule", outcome_rule, "first (Y = D + x1 + eps) or rowsum")
        ->check(CLI::IsMember({"first", "rowsum"}));
    app->add_option("--instrument", instrument, "latent (Z = 1{delta >= 0}) or independent")
        ->check(CLI::IsMember({"latent", "independent"}));
  }

  DgpConfig build(std::uint64_t seed) const {
    DgpConfig cfg = design.empty() ? DgpConfig{} : design_preset(design);
    if (n_opt->count()) cfg.n = n;
    if (dim_opt->count()) cfg.dim_x = dim_x;
    if (p_at_opt->count()) cfg.p_at = p_at;
    if (p_nt_opt->count()) cfg.p_nt = p_nt;
    if (u_opt->count()) cfg.u = u;
    cfg.outcome = outcome_rule == "rowsum" ? OutcomeRule::kRowSum : OutcomeRule::kFirstColumn;
    cfg.instrument = instrument == "independent" ? InstrumentRule::kIndependent : InstrumentRule::kLatentSign;
    cfg.seed = seed;
    cfg.validate();
    return cfg;
  }
};

struct RunFlags {
  std::string run_config;
  std::string write_config;
  std::string method;
  int k = 0;
  double alpha = 0.0;
  double lambda_scale = 0.0;
  double lambda = 0.0;
  std::vector<double> grid;
  int draws = 0;
  int reps = 0;
  std::uint64_t seed = 0;
  double clip_epsilon = 0.0;
  bool paper_scale = false;
  std::vector<CLI::Option*> opts;
  CLI::Option *method_opt, *k_opt, *alpha_opt, *scale_opt, *lambda_opt, *grid_opt, *draws_opt, *reps_opt,
      *seed_opt, *clip_opt;

  void attach(CLI::App* app) {
    app->add_option("--run-config", run_config, "JSON run configuration; flags override it");
    app->add_option("--write-config", write_config, "Write the effective run configuration here");
    method_opt = app->add_option("--method", method, "hdqlr, am16, dml, dml_nocf")
                     ->check(CLI::IsMember({"hdqlr", "am16", "dml", "dml_nocf"}));
    k_opt = app->add_option("--k", k, "Cross-fitting folds");
    alpha_opt = app->add_option("--alpha", alpha, "Level");
    scale_opt = app->add_option("--lambda-scale", lambda_scale, "Penalty scale in scale*sqrt(n log(pn))");
    lambda_opt = app->add_option("--lambda", lambda, "Fixed penalty for all nuisance fits");
    grid_opt = app->add_option("--grid", grid, "lo,hi,points")->delimiter(',')->expected(3);
    draws_opt = app->add_option("--draws", draws, "Critical-value draws");
    reps_opt = app->add_option("--reps", reps, "Cross-fitting repetitions (test, ci) or replications (power)");
    seed_opt = app->add_option("--seed", seed, "Master seed");
    clip_opt = app->add_option("--clip-epsilon", clip_epsilon, "Propensity clipping bound");
    app->add_flag("--paper-scale", paper_scale, "2500 replications and 1000 draws unless given explicitly");
  }

  RunConfig build() const {
    RunConfig cfg = run_config.empty() ? RunConfig{} : load_run_config(run_config);
    if (method_opt->count()) cfg.method = parse_method(method);
    if (k_opt->count()) cfg.k_folds = k;
    if (alpha_opt->count()) cfg.alpha = alpha;
    if (scale_opt->count()) cfg.lambda_scale = lambda_scale;
    if (lambda_opt->count()) cfg.lambda = lambda;
    if (grid_opt->count()) {
      const double points = grid[2];
      if (points != static_cast<int>(points)) throw ConfigError("--grid points must be an integer");
      cfg.grid = ThetaGrid::make(grid[0], grid[1], static_cast<int>(points));
    }
    if (draws_opt->count()) cfg.draws = draws;
    if (reps_opt->count()) cfg.reps = reps;
    if (seed_opt->count()) cfg.seed = seed;
    if (clip_opt->count()) cfg.clip_epsilon = clip_epsilon;
    if (paper_scale) cfg.paper_scale = true;
    if (!write_config.empty()) {
      std::ofstream f(write_config);
      if (!(f << to_json(cfg).dump(2) << '\n')) throw IoError("cannot write '" + write_config + "'");
    }
    return cfg;
  }
};

struct DataFlags {
  std::string data;
  std::string replication_config;
  std::string outcome = "y";
  std::string treatment = "d";
  std::string instrument = "z";
  std::vector<std::string> covariates;
  std::vector<std::string> intercept_columns;

  void attach(CLI::App* app) {
    app->add_option("--data", data, "CSV file")->required();
    app->add_option("--config", replication_config, "Replication config (column roles and expansion)");
    app->add_option("--outcome", outcome, "Outcome column");
    app->add_option("--treatment", treatment, "Treatment column");
    app->add_option("--instrument", instrument, "Instrument column");
    app->add_option("--covariates", covariates, "Covariate columns (default: all others)")->delimiter(',');
    app->add_option("--intercept-columns", intercept_columns, "Covariates allowed to be constant")
        ->delimiter(',');
  }

  Dataset load(LoadReport& report) const {
    if (!replication_config.empty()) {
      return load_replication_dataset(data, load_replication_config(replication_config), &report);
    }
    ColumnRoles roles;
    roles.outcome = outcome;
    roles.treatment = treatment;
    roles.instrument = instrument;
    roles.covariates = covariates;
    roles.intercept_columns = intercept_columns;
    return load_csv(data, roles, &report);
  }
};

void emit(const nlohmann::json& doc, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << doc.dump(2) << '\n';
    return;
  }
  std::ofstream f(path);
  if (!(f << doc.dump(2) << '\n')) throw IoError("cannot write '" + path + "'");
}

nlohmann::json data_summary(const Dataset& ds, const LoadReport& report) {
  return {{"n", ds.n()}, {"p", ds.p()}, {"rows_dropped_missing", report.rows_dropped_missing}};
}

// Lasso cross-fitting runs for hdqlr / dml / dml_nocf.
std::vector<CrossfitResult> lasso_runs(const Dataset& ds, const InferenceConfig& inf, Method method) {
  InferenceConfig local = inf;
  if (method == Method::kDmlNoCrossfit) {
    local.cross_fit = false;
    local.reps = 1;
  }
  return repeat_crossfit(ds, crossfit_options(local), local.reps);
}

nlohmann::json diagnostics_of(const std::vector<CrossfitResult>& runs) {
  auto out = nlohmann::json::array();
  for (const auto& r : runs) out.push_back(diagnostics_to_json(r));
  return out;
}

nlohmann::json run_inference(const Dataset& ds, const RunConfig& run, Command command,
                             std::optional<double> theta0, bool diagnostics) {
  const InferenceConfig inf = run.inference(command);
  const std::string_view name = method_name(run.method);
  nlohmann::json doc;
  std::vector<CrossfitResult> runs;
  if (run.method == Method::kAm16) {
    doc = command == Command::kTest ? test_to_json(am16_test(ds, *theta0, inf), name)
                                    : region_to_json(am16_confidence_interval(ds, inf), name);
  } else {
    runs = lasso_runs(ds, inf, run.method);
    if (run.method == Method::kHdqlr) {
      const auto moments = moments_of(runs);
      const ThetaGrid grid = inf.grid ? *inf.grid : default_grid(moments.front());
      doc = command == Command::kTest ? test_to_json(test_from_moments(moments, *theta0, grid, inf), name)
                                      : region_to_json(region_from_moments(moments, grid, inf), name);
    } else {
      const DmlEstimate est = dml_from_results(runs, inf.alpha);
      doc = command == Command::kTest ? dml_test_to_json(est, *theta0, name) : dml_to_json(est, name);
    }
  }
  if (diagnostics && !runs.empty()) doc["diagnostics"] = diagnostics_of(runs);
  return doc;
}

std::vector<Method> parse_methods(const std::vector<std::string>& names) {
  std::vector<Method> out;
  for (const auto& n : names) out.push_back(parse_method(n));
  return out;
}

int exit_code(const Error& e) {
  switch (e.category()) {
    case Error::Category::kConfig: return kExitConfig;
    case Error::Category::kIo: return kExitIo;
    case Error::Category::kNumerical: return kExitNumerical;
  }
  return kExitNumerical;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"HD-QLR weak-identification-robust inference for the LATE"};
  app.require_subcommand(1);

  std::string out_path;
  std::uint64_t sim_seed = 0;
  DgpFlags sim_dgp;
  auto* simulate = app.add_subcommand("simulate", "Draw a dataset from the threshold-crossing design");
  sim_dgp.attach(simulate);
  simulate->add_option("--seed", sim_seed, "Seed");
  simulate->add_option("--out", out_path, "CSV path")->required();

  DataFlags test_data, ci_data;
  RunFlags test_run, ci_run, power_run;
  double theta0 = 0.0;
  bool test_diag = false, ci_diag = false;
  std::string test_out, ci_out;

  auto* test_cmd = app.add_subcommand("test", "Test H0: theta = theta0");
  test_data.attach(test_cmd);
  test_run.attach(test_cmd);
  test_cmd->add_option("--theta0", theta0, "Hypothesized LATE")->required();
  test_cmd->add_option("--out", test_out, "JSON path (default stdout)");
  test_cmd->add_flag("--diagnostics", test_diag, "Include per-fold penalties and support sizes");

  auto* ci_cmd = app.add_subcommand("ci", "Confidence region by test inversion over the grid");
  ci_data.attach(ci_cmd);
  ci_run.attach(ci_cmd);
  ci_cmd->add_option("--out", ci_out, "JSON path (default stdout)");
  ci_cmd->add_flag("--diagnostics", ci_diag, "Include per-fold penalties and support sizes");

  DgpFlags power_dgp;
  std::vector<std::string> methods{"hdqlr"};
  std::vector<double> thetas{-1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
  int jobs = 1;
  std::string power_out;
  auto* power = app.add_subcommand("power", "Rejection rates over replications of the simulation design");
  power_dgp.attach(power);
  power_run.attach(power);
  power->add_option("--methods", methods, "Comma-separated methods")->delimiter(',');
  power->add_option("--thetas", thetas, "Hypothesized values (must include 1)")->delimiter(',');
  power->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  power->add_option("--out", power_out, "CSV path (default stdout)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    const ConfigError wrapped(e.what());
    out << error_to_json(wrapped).dump(2) << '\n';
    err << "hdqlr: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    if (*simulate) {
      const DgpConfig cfg = sim_dgp.build(sim_seed);
      const SimulatedSample sample = generate_sample(cfg);
      write_csv(sample.data, out_path);
      emit({{"n", sample.data.n()},
            {"p", sample.data.p()},
            {"complier_share", sample.complier_share()},
            {"design_id", cfg.design_id()},
            {"seed", cfg.seed},
            {"out", out_path}},
           "", out);
    } else if (*test_cmd || *ci_cmd) {
      const bool is_test = static_cast<bool>(*test_cmd);
      const Command command = is_test ? Command::kTest : Command::kCi;
      const RunConfig run_cfg = (is_test ? test_run : ci_run).build();
      LoadReport report;
      const Dataset ds = (is_test ? test_data : ci_data).load(report);
      nlohmann::json doc = run_inference(ds, run_cfg, command, is_test ? std::optional(theta0) : std::nullopt,
                                         is_test ? test_diag : ci_diag);
      doc["data"] = data_summary(ds, report);
      nlohmann::json used = to_json(run_cfg);
      used["reps"] = run_cfg.effective_reps(command);
      used["draws"] = run_cfg.effective_draws();
      doc["config"] = used;
      emit(doc, is_test ? test_out : ci_out, out);
    } else if (*power) {
      const RunConfig run_cfg = power_run.build();
      PowerOptions opts;
      opts.methods = parse_methods(methods);
      opts.theta_values = thetas;
      opts.reps = run_cfg.effective_reps(Command::kPower);
      opts.inference = run_cfg.inference(Command::kPower);
      opts.jobs = jobs;
      const PowerCurve curve = power_experiment(power_dgp.build(run_cfg.seed), opts);
      if (power_out.empty()) {
        write_power_csv(curve, out);
      } else {
        std::ofstream f(power_out);
        write_power_csv(curve, f);
        if (!f) throw IoError("cannot write '" + power_out + "'");
      }
      for (std::size_t m = 0; m < curve.methods.size(); ++m) {
        if (curve.failures[m] > 0) {
          err << "hdqlr: " << method_name(curve.methods[m]) << " failed on " << curve.failures[m]
              << " replications (excluded)\n";
        }
      }
    }
    return kExitOk;
  } catch (const Error& e) {
    out << error_to_json(e).dump(2) << '\n';
    err << "hdqlr: " << e.what() << '\n';
    return exit_code(e);
  } catch (const std::exception& e) {
    out << error_to_json(e).dump(2) << '\n';
    err << "hdqlr: internal error: " << e.what() << '\n';
    return kExitNumerical;
  }
}

}  // namespace hdqlr::cli
