#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hdqlr/crossfit.hpp"
#include "hdqlr/data.hpp"

namespace hdqlr {

/// Uniform grid over the parameter set Theta = [lo, hi], endpoints included.
struct ThetaGrid {
  double lo = 0.0;
  double hi = 1.0;
  int points = 2;

  // Throws ConfigError unless lo < hi and points >= 2.
  static ThetaGrid make(double lo, double hi, int points);
  std::vector<double> values() const;
};

// How the observed statistic is formed.
enum class StatisticSource {
  kData,           // xi = q_hat(theta0) from the sample
  kSimulatedDraw,  // an extra independent xi* ~ N(0, Omega(theta0, theta0)), literal reading
};

enum class InfimumMethod { kExact, kDenseGrid };

struct InferenceConfig {
  int k = 3;
  double alpha = 0.05;
  double lambda_scale = 0.5;
  std::optional<double> fixed_lambda;
  // Theta and the CI grid. When absent: DML estimate +- 20 standard errors, 401 points.
  std::optional<ThetaGrid> grid;
  int draws = 500;
  int reps = 1;
  std::uint64_t seed = 0;
  double clip_epsilon = 0.01;
  NuisanceLearner learner = NuisanceLearner::kLasso;
  bool cross_fit = true;
  LassoOptions lasso;
  StatisticSource statistic = StatisticSource::kData;
  InfimumMethod infimum = InfimumMethod::kExact;
  int dense_points = 1'000'000;
  double var_floor = 1e-12;

  void validate() const;
};

CrossfitOptions crossfit_options(const InferenceConfig& cfg);

struct TestOutcome {
  double theta0 = 0.0;
  double statistic = 0.0;       // averaged over repetitions
  double critical_value = 0.0;  // averaged over repetitions
  double alpha = 0.05;
  bool reject = false;
  int draws_used = 0;
  std::uint64_t seed = 0;
  std::vector<double> per_rep_statistic;
  std::vector<double> per_rep_critical_value;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double width() const { return hi - lo; }
};

struct ConfidenceRegion {
  double alpha = 0.05;
  ThetaGrid grid;
  // Pointwise decision of the repetition-averaged test at each grid value.
  std::vector<bool> accepted;
  std::vector<Interval> intervals;
  double length = 0.0;
  bool empty = true;
  std::vector<std::vector<Interval>> per_rep;
  std::vector<std::string> warnings;
};

/// h(theta) = q_hat(theta) - Omega(theta, theta0) / Omega(theta0, theta0) * q_hat(theta0).
/// Throws DegenerateVarianceError when Omega(theta0, theta0) <= var_floor.
double h_process(const KernelMoments& m, double theta0, double theta, double var_floor = 1e-12);

/// R = xi^2 / Omega00 - inf_{theta in [lo, hi]} (Omega(theta, theta0) / Omega00 * xi + h(theta))^2 / Omega(theta, theta).
/// theta0 must lie in [lo, hi]; lo == hi is allowed. The inner objective is a
/// squared linear form over a quadratic; the exact method evaluates it at the
/// interval ends, theta0 and both stationary points.
double r_statistic(double xi, const KernelMoments& m, double theta0, double lo, double hi,
                   InfimumMethod method = InfimumMethod::kExact, int dense_points = 1'000'000,
                   double var_floor = 1e-12);
double r_statistic(double xi, const KernelMoments& m, double theta0, const ThetaGrid& grid,
                   InfimumMethod method = InfimumMethod::kExact, int dense_points = 1'000'000,
                   double var_floor = 1e-12);

// Observed statistic with xi = q_hat(theta0).
double observed_statistic(const KernelMoments& m, double theta0, const ThetaGrid& grid,
                          InfimumMethod method = InfimumMethod::kExact, double var_floor = 1e-12);

/// Sorted R(xi*_j) for xi*_j ~ iid N(0, Omega(theta0, theta0)), j = 1..draws,
/// generated from Rng(seed).
std::vector<double> simulate_null_statistics(const KernelMoments& m, double theta0,
                                             const ThetaGrid& grid, int draws, std::uint64_t seed,
                                             InfimumMethod method = InfimumMethod::kExact,
                                             double var_floor = 1e-12);

// Order statistic ceil((1 - alpha) M) (1-based) of an ascending sample.
double upper_quantile(const std::vector<double>& sorted, double alpha);

/// Empirical (1 - alpha) quantile of the simulated conditional null distribution.
double critical_value(const KernelMoments& m, double theta0, const ThetaGrid& grid, double alpha,
                      int draws, std::uint64_t seed, InfimumMethod method = InfimumMethod::kExact,
                      double var_floor = 1e-12);

// Seed of the xi* stream for repetition `rep` (0-based) at hypothesized theta0.
std::uint64_t draw_seed(std::uint64_t master, int rep, double theta0);

// DML point estimate +- 20 standard errors, 401 points. Throws ConfigError
// when the estimate is undefined (weak denominator) and an explicit grid is required.
ThetaGrid default_grid(const KernelMoments& m);

/// Test from precomputed per-repetition moments (one entry per repetition).
TestOutcome test_from_moments(const std::vector<KernelMoments>& reps, double theta0,
                              const ThetaGrid& grid, const InferenceConfig& cfg);

/// Test inversion over grid values from precomputed per-repetition moments.
ConfidenceRegion region_from_moments(const std::vector<KernelMoments>& reps, const ThetaGrid& grid,
                                     const InferenceConfig& cfg);

// Maximal runs of accepted grid values.
std::vector<Interval> accepted_runs(const std::vector<double>& values,
                                    const std::vector<bool>& accepted);

/// HD-QLR test of H0: theta = theta0 (cross-fitting repeated cfg.reps times).
TestOutcome test(const Dataset& ds, double theta0, const InferenceConfig& cfg);

/// Confidence region {theta : R(theta) <= c_alpha(theta)} on the grid.
ConfidenceRegion confidence_interval(const Dataset& ds, const InferenceConfig& cfg);

std::vector<KernelMoments> moments_of(const std::vector<CrossfitResult>& results);

}  // namespace hdqlr
