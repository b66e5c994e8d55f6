#include "hdqlr/dgp.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <optional>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "hdqlr/error.hpp"
#include "hdqlr/rng.hpp"

namespace hdqlr {

namespace {

double standard_normal_cdf(double t) { return 0.5 * std::erfc(-t / std::sqrt(2.0)); }

double logit(double prob) { return std::log(prob / (1.0 - prob)); }

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

// Conditional treatment probabilities P(D = 1 | Z = 1) and P(D = 1 | Z = 0).
std::pair<double, double> treatment_probabilities(const DgpConfig& cfg) {
  if (cfg.instrument == InstrumentRule::kLatentSign) {
    // Z = 1 iff Phi(delta) is uniform on [1/2, 1); Z = 0 iff uniform on [0, 1/2).
    return {(0.5 - cfg.p_nt) / 0.5, cfg.p_at / 0.5};
  }
  return {1.0 - cfg.p_nt, cfg.p_at};
}

}  // namespace

void DgpConfig::validate() const {
  if (n < 10) throw ConfigError("dgp: n must be at least 10");
  if (dim_x < 1) throw ConfigError("dgp: dim_x must be at least 1");
  if (!(p_at >= 0.0 && p_at < 0.5)) throw ConfigError("dgp: p_at must lie in [0, 0.5)");
  if (!(p_nt >= 0.0 && p_nt < 0.5)) throw ConfigError("dgp: p_nt must lie in [0, 0.5)");
  if (!(p_at + p_nt < 1.0)) throw ConfigError("dgp: p_at + p_nt must be below 1");
  if (!(u > -1.0 && u < 1.0)) throw ConfigError("dgp: u must lie in (-1, 1)");
}

std::string DgpConfig::design_id() const {
  std::ostringstream id;
  id << "n" << n << "_dx" << dim_x << "_pat" << format_number(p_at) << "_pnt"
     << format_number(p_nt) << "_u" << format_number(u)
     << (outcome == OutcomeRule::kRowSum ? "_rowsum" : "")
     << (instrument == InstrumentRule::kIndependent ? "_indepz" : "");
  return id.str();
}

DgpConfig design_preset(const std::string& name) {
  DgpConfig cfg;
  if (name == "strong") {
    cfg.p_at = cfg.p_nt = 0.25;
  } else if (name == "weak") {
    cfg.p_at = cfg.p_nt = 0.45;
  } else if (name == "unidentified" || name == "none") {
    cfg.p_at = cfg.p_nt = 0.49;
  } else {
    throw ConfigError("unknown design '" + name + "' (strong, weak, unidentified)");
  }
  return cfg;
}

double SimulatedSample::complier_share() const {
  std::size_t count = 0;
  for (std::size_t i = 0; i < d0.size(); ++i) count += (d1[i] == 1 && d0[i] == 0);
  return static_cast<double>(count) / static_cast<double>(d0.size());
}

double SimulatedSample::complier_effect() const {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < d0.size(); ++i) {
    if (d1[i] == 1 && d0[i] == 0) {
      const auto r = static_cast<Eigen::Index>(i);
      sum += y1[r] - y0[r];
      ++count;
    }
  }
  return count ? sum / static_cast<double>(count) : std::nan("");
}

Eigen::MatrixXd toeplitz_cholesky(std::size_t dim_x, double u) {
  const auto p = static_cast<Eigen::Index>(dim_x);
  Eigen::MatrixXd sigma(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index k = 0; k < p; ++k) {
      sigma(j, k) = std::pow(u, static_cast<double>(std::abs(j - k)));
    }
  }
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) throw NumericalError("Toeplitz covariance is not positive definite");
  return llt.matrixL();
}

SimulatedSample generate_sample(const DgpConfig& cfg) {
  cfg.validate();
  return generate_sample(cfg, toeplitz_cholesky(cfg.dim_x, cfg.u));
}

SimulatedSample generate_sample(const DgpConfig& cfg, const Eigen::MatrixXd& cholesky) {
  cfg.validate();
  const auto n = static_cast<Eigen::Index>(cfg.n);
  const auto p = static_cast<Eigen::Index>(cfg.dim_x);
  if (cholesky.rows() != p || cholesky.cols() != p) throw ConfigError("dgp: Cholesky factor has wrong size");
  Rng rng(cfg.seed);

  Eigen::MatrixXd e(n, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) e(i, j) = rng.normal();
  }
  Eigen::MatrixXd x = e * cholesky.transpose();

  Eigen::VectorXd delta(n), eps(n);
  for (Eigen::Index i = 0; i < n; ++i) delta[i] = rng.normal();
  for (Eigen::Index i = 0; i < n; ++i) eps[i] = rng.normal();
  Eigen::VectorXd z(n);
  if (cfg.instrument == InstrumentRule::kIndependent) {
    for (Eigen::Index i = 0; i < n; ++i) z[i] = rng.uniform() < 0.5 ? 1.0 : 0.0;
  } else {
    for (Eigen::Index i = 0; i < n; ++i) z[i] = delta[i] >= 0.0 ? 1.0 : 0.0;
  }

  std::vector<int> d0(cfg.n), d1(cfg.n);
  Eigen::VectorXd d(n), y(n), y0(n), y1(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double phi = standard_normal_cdf(delta[i]);
    const auto k = static_cast<std::size_t>(i);
    d0[k] = phi < cfg.p_at ? 1 : 0;
    d1[k] = phi < 1.0 - cfg.p_nt ? 1 : 0;
    if (d1[k] < d0[k]) throw NumericalError("dgp: monotonicity D(1) >= D(0) violated");
    d[i] = z[i] == 1.0 ? d1[k] : d0[k];
    const double covariate_term = cfg.outcome == OutcomeRule::kRowSum ? x.row(i).sum() : x(i, 0);
    y0[i] = covariate_term + eps[i];
    y1[i] = 1.0 + y0[i];
    y[i] = d[i] == 1.0 ? y1[i] : y0[i];
  }

  std::vector<std::string> names;
  for (std::size_t j = 1; j <= cfg.dim_x; ++j) names.push_back("x" + std::to_string(j));
  return SimulatedSample{Dataset(std::move(y), std::move(d), std::move(z), std::move(x), std::move(names)),
                         std::move(d0), std::move(d1), std::move(y0), std::move(y1)};
}

Dataset generate(const DgpConfig& cfg) { return generate_sample(cfg).data; }

NuisanceFit true_nuisances(const DgpConfig& cfg, double clip_epsilon) {
  cfg.validate();
  const auto [m1, m0] = treatment_probabilities(cfg);
  if (!(m0 > 0.0 && m0 < 1.0 && m1 > 0.0 && m1 < 1.0)) {
    throw ConfigError("true nuisances need 0 < P(D = 1 | Z) < 1 for both instrument values");
  }
  const auto p = static_cast<Eigen::Index>(cfg.dim_x);
  NuisanceFit fit;
  fit.clip_epsilon = clip_epsilon;
  fit.first_stage_intercept = logit(m0);
  fit.beta11 = logit(m1) - logit(m0);
  fit.beta12 = Eigen::VectorXd::Zero(p);
  fit.gamma = Eigen::VectorXd::Zero(p);  // P(Z = 1 | X) = 1/2 under both rules
  fit.reduced_form_intercept = m0;
  fit.beta21 = m1 - m0;
  fit.beta22 = Eigen::VectorXd::Zero(p);
  if (cfg.outcome == OutcomeRule::kRowSum) {
    fit.beta22.setOnes();
  } else {
    fit.beta22[0] = 1.0;
  }
  return fit;
}

PowerCurve power_experiment(const DgpConfig& design, const PowerOptions& options) {
  design.validate();
  if (options.reps < 1) throw ConfigError("power: reps must be at least 1");
  if (options.methods.empty()) throw ConfigError("power: no methods");
  if (std::find(options.theta_values.begin(), options.theta_values.end(), 1.0) ==
      options.theta_values.end()) {
    throw ConfigError("power: theta values must include the true value 1");
  }
  InferenceConfig base = options.inference;
  if (!base.grid) base.grid = ThetaGrid::make(-9.0, 11.0, 401);
  base.validate();
  for (double t : options.theta_values) {
    if (t < base.grid->lo || t > base.grid->hi) throw ConfigError("power: theta value outside Theta");
  }

  const Eigen::MatrixXd cholesky = toeplitz_cholesky(design.dim_x, design.u);
  const std::size_t methods = options.methods.size();
  const std::size_t thetas = options.theta_values.size();
  // outcome[rep][method]: empty when the method failed on that replication.
  std::vector<std::vector<std::vector<char>>> outcome(
      static_cast<std::size_t>(options.reps), std::vector<std::vector<char>>(methods));

  auto run_one = [&](int rep) {
    DgpConfig cfg = design;
    cfg.seed = derive_seed(design.seed, {static_cast<std::uint64_t>(rep), 0});
    const Dataset ds = generate_sample(cfg, cholesky).data;
    InferenceConfig inf = base;
    inf.seed = derive_seed(design.seed, {static_cast<std::uint64_t>(rep), 1});
    auto& slot = outcome[static_cast<std::size_t>(rep)];
    // hdqlr and cross-fitted DML share the same lasso cross-fitting runs.
    std::optional<std::vector<CrossfitResult>> lasso_runs;
    auto shared_runs = [&]() -> const std::vector<CrossfitResult>& {
      if (!lasso_runs) lasso_runs = repeat_crossfit(ds, crossfit_options(inf), inf.reps);
      return *lasso_runs;
    };
    for (std::size_t m = 0; m < methods; ++m) {
      std::vector<char> rejects(thetas, 0);
      try {
        switch (options.methods[m]) {
          case Method::kHdqlr:
          case Method::kAm16: {
            const InferenceConfig used = options.methods[m] == Method::kAm16 ? am16_config(inf) : inf;
            if (options.methods[m] == Method::kAm16 && ds.n() <= ds.p() + 2) {
              throw SingularFitError("AM16 needs n > p + 2");
            }
            const auto moments = options.methods[m] == Method::kHdqlr
                                     ? moments_of(shared_runs())
                                     : moments_of(repeat_crossfit(ds, crossfit_options(used), used.reps));
            for (std::size_t t = 0; t < thetas; ++t) {
              rejects[t] = test_from_moments(moments, options.theta_values[t], *used.grid, used).reject;
            }
            break;
          }
          case Method::kDml:
          case Method::kDmlNoCrossfit: {
            const bool shareable = inf.learner == NuisanceLearner::kLasso && inf.cross_fit;
            const DmlEstimate est = options.methods[m] == Method::kDml && shareable
                                        ? dml_from_results(shared_runs(), inf.alpha)
                                        : dml_estimate(ds, options.methods[m] == Method::kDml, inf);
            for (std::size_t t = 0; t < thetas; ++t) rejects[t] = dml_rejects(est, options.theta_values[t]);
            break;
          }
        }
        slot[m] = std::move(rejects);
      } catch (const NumericalError&) {
        slot[m].clear();
      }
    }
  };

  const int jobs = std::max(1, options.jobs);
  if (jobs == 1) {
    for (int r = 0; r < options.reps; ++r) run_one(r);
  } else {
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> workers;
    for (int w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        for (int r = next++; r < options.reps; r = next++) {
          try {
            run_one(r);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    for (auto& t : workers) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  PowerCurve curve;
  curve.theta_values = options.theta_values;
  curve.methods = options.methods;
  curve.reps = options.reps;
  curve.alpha = base.alpha;
  curve.design = design;
  curve.rejection_rate.assign(methods, std::vector<double>(thetas, 0.0));
  curve.completed.assign(methods, 0);
  curve.failures.assign(methods, 0);
  for (const auto& rep : outcome) {
    for (std::size_t m = 0; m < methods; ++m) {
      if (rep[m].empty()) {
        ++curve.failures[m];
        continue;
      }
      ++curve.completed[m];
      for (std::size_t t = 0; t < thetas; ++t) curve.rejection_rate[m][t] += rep[m][t];
    }
  }
  for (std::size_t m = 0; m < methods; ++m) {
    if (curve.failures[m] > options.max_failure_fraction * options.reps) {
      throw NumericalError("power: method " + std::string(method_name(options.methods[m])) + " failed on " +
                           std::to_string(curve.failures[m]) + " of " + std::to_string(options.reps) +
                           " replications");
    }
    for (auto& rate : curve.rejection_rate[m]) rate /= curve.completed[m];
  }
  return curve;
}

void write_power_csv(const PowerCurve& curve, std::ostream& out) {
  const std::string id = curve.design.design_id();
  out << "theta,method,rate,reps,design_id\n";
  for (std::size_t m = 0; m < curve.methods.size(); ++m) {
    for (std::size_t t = 0; t < curve.theta_values.size(); ++t) {
      out << format_number(curve.theta_values[t]) << ',' << method_name(curve.methods[m]) << ','
          << format_number(curve.rejection_rate[m][t]) << ',' << curve.completed[m] << ',' << id << '\n';
    }
  }
}

}  // namespace hdqlr
