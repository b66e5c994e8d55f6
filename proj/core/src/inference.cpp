#include "hdqlr/inference.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "hdqlr/error.hpp"
#include "hdqlr/rng.hpp"

namespace hdqlr {

namespace {

// Inner objective f(theta) = (a theta + b)^2 / (c theta^2 + d theta + e).
struct InnerObjective {
  double a, b, c, d, e;

  double denominator(double theta) const { return (c * theta + d) * theta + e; }
  double operator()(double theta) const {
    const double num = a * theta + b;
    return num * num / denominator(theta);
  }
};

double checked_variance(const KernelMoments& m, double theta0, double var_floor) {
  const double v = omega(m, theta0, theta0);
  if (!(v > var_floor)) {
    throw DegenerateVarianceError("Omega(theta0, theta0) = " + std::to_string(v) +
                                  " is at or below the variance floor at theta0 = " +
                                  std::to_string(theta0));
  }
  return v;
}

// Smallest Omega(theta, theta) over [lo, hi].
double min_variance(const KernelMoments& m, double lo, double hi) {
  double v = std::min(omega(m, lo, lo), omega(m, hi, hi));
  if (m.c_aa > 0.0) {
    const double vertex = -m.c_ab / m.c_aa;
    if (vertex > lo && vertex < hi) v = std::min(v, omega(m, vertex, vertex));
  }
  return v;
}

}  // namespace

ThetaGrid ThetaGrid::make(double lo, double hi, int points) {
  if (!(std::isfinite(lo) && std::isfinite(hi) && lo < hi)) {
    throw ConfigError("theta grid needs finite lo < hi");
  }
  if (points < 2) throw ConfigError("theta grid needs at least 2 points");
  return ThetaGrid{lo, hi, points};
}

std::vector<double> ThetaGrid::values() const {
  std::vector<double> out(static_cast<std::size_t>(points));
  const double step = (hi - lo) / static_cast<double>(points - 1);
  for (int i = 0; i < points; ++i) out[static_cast<std::size_t>(i)] = lo + step * i;
  out.back() = hi;
  return out;
}

void InferenceConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  if (draws < 100) throw ConfigError("at least 100 critical-value draws are required");
  if (reps < 1) throw ConfigError("repetitions must be at least 1");
  if (cross_fit && k < 2) throw ConfigError("cross-fitting needs k >= 2");
  if (!fixed_lambda && !(lambda_scale > 0.0)) throw ConfigError("lambda scale must be positive");
  if (fixed_lambda && !(*fixed_lambda >= 0.0)) throw ConfigError("lambda must be non-negative");
  if (!(clip_epsilon > 0.0 && clip_epsilon < 0.5)) throw ConfigError("clip epsilon must lie in (0, 0.5)");
  if (dense_points < 2) throw ConfigError("dense grid needs at least 2 points");
  if (grid) ThetaGrid::make(grid->lo, grid->hi, grid->points);
}

CrossfitOptions crossfit_options(const InferenceConfig& cfg) {
  CrossfitOptions o;
  o.k = cfg.k;
  o.lambda_scale = cfg.lambda_scale;
  o.fixed_lambda = cfg.fixed_lambda;
  o.seed = cfg.seed;
  o.learner = cfg.learner;
  o.cross_fit = cfg.cross_fit;
  o.clip_epsilon = cfg.clip_epsilon;
  o.lasso = cfg.lasso;
  return o;
}

double h_process(const KernelMoments& m, double theta0, double theta, double var_floor) {
  const double v00 = checked_variance(m, theta0, var_floor);
  if (theta == theta0) return 0.0;
  return q_hat(m, theta) - omega(m, theta, theta0) / v00 * q_hat(m, theta0);
}

double r_statistic(double xi, const KernelMoments& m, double theta0, double lo, double hi,
                   InfimumMethod method, int dense_points, double var_floor) {
  if (!(lo <= theta0 && theta0 <= hi)) {
    throw ConfigError("theta0 = " + std::to_string(theta0) + " lies outside Theta = [" +
                      std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  const double v00 = checked_variance(m, theta0, var_floor);
  if (!(min_variance(m, lo, hi) > var_floor)) {
    throw DegenerateVarianceError("Omega(theta, theta) reaches the variance floor inside Theta");
  }

  const double root_n = std::sqrt(static_cast<double>(m.n));
  const double slope0 = theta0 * m.c_aa + m.c_ab;  // Omega(theta, theta0) = slope0 theta + level0
  const double level0 = theta0 * m.c_ab + m.c_bb;
  const double kappa = (xi - q_hat(m, theta0)) / v00;
  const InnerObjective f{slope0 * kappa + root_n * m.mean_a, level0 * kappa + root_n * m.mean_b,
                         m.c_aa, 2.0 * m.c_ab, m.c_bb};

  // The objective at theta0 is xi^2 / Omega00 exactly; using that value keeps R >= 0.
  const double at_theta0 = xi * xi / v00;
  double inf = at_theta0;
  auto consider = [&](double theta) {
    if (!std::isfinite(theta)) return;
    inf = std::min(inf, f(std::clamp(theta, lo, hi)));
  };

  if (method == InfimumMethod::kExact) {
    consider(lo);
    consider(hi);
    if (f.a != 0.0) consider(-f.b / f.a);
    const double slope = f.a * f.d - 2.0 * f.b * f.c;
    const double intercept = 2.0 * f.a * f.e - f.b * f.d;
    if (slope != 0.0) consider(-intercept / slope);
  } else {
    const double step = (hi - lo) / static_cast<double>(dense_points - 1);
    for (int i = 0; i < dense_points; ++i) consider(lo + step * i);
  }
  return at_theta0 - inf;
}

double r_statistic(double xi, const KernelMoments& m, double theta0, const ThetaGrid& grid,
                   InfimumMethod method, int dense_points, double var_floor) {
  return r_statistic(xi, m, theta0, grid.lo, grid.hi, method, dense_points, var_floor);
}

double observed_statistic(const KernelMoments& m, double theta0, const ThetaGrid& grid,
                          InfimumMethod method, double var_floor) {
  return r_statistic(q_hat(m, theta0), m, theta0, grid, method, 1'000'000, var_floor);
}

std::vector<double> simulate_null_statistics(const KernelMoments& m, double theta0,
                                             const ThetaGrid& grid, int draws, std::uint64_t seed,
                                             InfimumMethod method, double var_floor) {
  const double sd = std::sqrt(checked_variance(m, theta0, var_floor));
  Rng rng(seed);
  std::vector<double> out(static_cast<std::size_t>(draws));
  for (auto& r : out) {
    r = r_statistic(sd * rng.normal(), m, theta0, grid, method, 1'000'000, var_floor);
  }
  std::sort(out.begin(), out.end());
  return out;
}

double upper_quantile(const std::vector<double>& sorted, double alpha) {
  if (sorted.empty()) throw ConfigError("upper_quantile: empty sample");
  const double m = static_cast<double>(sorted.size());
  auto index = static_cast<std::size_t>(std::ceil((1.0 - alpha) * m - 1e-9));
  index = std::clamp<std::size_t>(index, 1, sorted.size());
  return sorted[index - 1];
}

double critical_value(const KernelMoments& m, double theta0, const ThetaGrid& grid, double alpha,
                      int draws, std::uint64_t seed, InfimumMethod method, double var_floor) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  if (draws < 100) throw ConfigError("at least 100 critical-value draws are required");
  return upper_quantile(simulate_null_statistics(m, theta0, grid, draws, seed, method, var_floor),
                        alpha);
}

std::uint64_t draw_seed(std::uint64_t master, int rep, double theta0) {
  if (theta0 == 0.0) theta0 = 0.0;  // fold -0.0 into +0.0
  return derive_seed(master, {static_cast<std::uint64_t>(rep), std::bit_cast<std::uint64_t>(theta0)});
}

ThetaGrid default_grid(const KernelMoments& m) {
  const double denominator = -m.mean_a;
  if (std::abs(denominator) < kWeakDenominator) {
    throw ConfigError("the point estimate is undefined (weak compliance); pass an explicit grid");
  }
  const double estimate = m.mean_b / denominator;
  const double se =
      std::sqrt(omega(m, estimate, estimate) / static_cast<double>(m.n)) / std::abs(denominator);
  if (!std::isfinite(estimate) || !(se > 0.0) || !std::isfinite(se)) {
    throw ConfigError("cannot center a default grid (estimate " + std::to_string(estimate) +
                      ", se " + std::to_string(se) + "); pass an explicit grid");
  }
  return ThetaGrid::make(estimate - 20.0 * se, estimate + 20.0 * se, 401);
}

TestOutcome test_from_moments(const std::vector<KernelMoments>& reps, double theta0,
                              const ThetaGrid& grid, const InferenceConfig& cfg) {
  if (reps.empty()) throw ConfigError("no repetitions to test");
  TestOutcome out;
  out.theta0 = theta0;
  out.alpha = cfg.alpha;
  out.draws_used = cfg.draws;
  out.seed = cfg.seed;
  double stat_sum = 0.0;
  double crit_sum = 0.0;
  for (std::size_t r = 0; r < reps.size(); ++r) {
    const KernelMoments& m = reps[r];
    const std::uint64_t seed = draw_seed(cfg.seed, static_cast<int>(r), theta0);
    double stat;
    if (cfg.statistic == StatisticSource::kData) {
      stat = observed_statistic(m, theta0, grid, cfg.infimum, cfg.var_floor);
    } else {
      Rng rng(derive_seed(seed, {0xD1ULL}));
      const double xi = std::sqrt(omega(m, theta0, theta0)) * rng.normal();
      stat = r_statistic(xi, m, theta0, grid, cfg.infimum, cfg.dense_points, cfg.var_floor);
    }
    const double crit = critical_value(m, theta0, grid, cfg.alpha, cfg.draws, seed, cfg.infimum,
                                       cfg.var_floor);
    out.per_rep_statistic.push_back(stat);
    out.per_rep_critical_value.push_back(crit);
    stat_sum += stat;
    crit_sum += crit;
  }
  const double count = static_cast<double>(reps.size());
  out.statistic = stat_sum / count;
  out.critical_value = crit_sum / count;
  out.reject = out.statistic > out.critical_value;
  return out;
}

std::vector<Interval> accepted_runs(const std::vector<double>& values,
                                    const std::vector<bool>& accepted) {
  std::vector<Interval> out;
  std::size_t i = 0;
  while (i < values.size()) {
    if (!accepted[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < values.size() && accepted[j + 1]) ++j;
    out.push_back({values[i], values[j]});
    i = j + 1;
  }
  return out;
}

ConfidenceRegion region_from_moments(const std::vector<KernelMoments>& reps, const ThetaGrid& grid,
                                     const InferenceConfig& cfg) {
  ConfidenceRegion region;
  region.alpha = cfg.alpha;
  region.grid = grid;
  const std::vector<double> values = grid.values();
  std::vector<std::vector<bool>> rep_accepted(reps.size(), std::vector<bool>(values.size()));
  region.accepted.resize(values.size());
  for (std::size_t g = 0; g < values.size(); ++g) {
    const TestOutcome t = test_from_moments(reps, values[g], grid, cfg);
    region.accepted[g] = !t.reject;
    for (std::size_t r = 0; r < reps.size(); ++r) {
      rep_accepted[r][g] = !(t.per_rep_statistic[r] > t.per_rep_critical_value[r]);
    }
  }
  for (const auto& acc : rep_accepted) region.per_rep.push_back(accepted_runs(values, acc));

  if (reps.size() == 1) {
    region.intervals = accepted_runs(values, region.accepted);
  } else {
    const std::size_t components = region.per_rep.front().size();
    const bool agree = std::all_of(region.per_rep.begin(), region.per_rep.end(),
                                   [&](const auto& runs) { return runs.size() == components; });
    if (agree) {
      region.intervals.assign(components, Interval{0.0, 0.0});
      for (const auto& runs : region.per_rep) {
        for (std::size_t c = 0; c < components; ++c) {
          region.intervals[c].lo += runs[c].lo;
          region.intervals[c].hi += runs[c].hi;
        }
      }
      const double count = static_cast<double>(reps.size());
      for (auto& iv : region.intervals) {
        iv.lo /= count;
        iv.hi /= count;
      }
    } else {
      std::vector<Interval> all;
      for (const auto& runs : region.per_rep) all.insert(all.end(), runs.begin(), runs.end());
      std::sort(all.begin(), all.end(), [](const Interval& x, const Interval& y) { return x.lo < y.lo; });
      for (const auto& iv : all) {
        if (!region.intervals.empty() && iv.lo <= region.intervals.back().hi) {
          region.intervals.back().hi = std::max(region.intervals.back().hi, iv.hi);
        } else {
          region.intervals.push_back(iv);
        }
      }
      region.warnings.push_back(
          "repetitions disagree on the number of accepted components; reporting their union");
    }
  }
  for (const auto& iv : region.intervals) region.length += iv.width();
  region.empty = region.intervals.empty();
  if (region.empty) region.warnings.push_back("every grid point was rejected");
  return region;
}

std::vector<KernelMoments> moments_of(const std::vector<CrossfitResult>& results) {
  std::vector<KernelMoments> out;
  out.reserve(results.size());
  for (const auto& r : results) out.push_back(r.moments);
  return out;
}

TestOutcome test(const Dataset& ds, double theta0, const InferenceConfig& cfg) {
  cfg.validate();
  const auto results = repeat_crossfit(ds, crossfit_options(cfg), cfg.reps);
  const auto moments = moments_of(results);
  const ThetaGrid grid = cfg.grid ? *cfg.grid : default_grid(moments.front());
  return test_from_moments(moments, theta0, grid, cfg);
}

ConfidenceRegion confidence_interval(const Dataset& ds, const InferenceConfig& cfg) {
  cfg.validate();
  const auto results = repeat_crossfit(ds, crossfit_options(cfg), cfg.reps);
  const auto moments = moments_of(results);
  const ThetaGrid grid = cfg.grid ? *cfg.grid : default_grid(moments.front());
  return region_from_moments(moments, grid, cfg);
}

}  // namespace hdqlr
