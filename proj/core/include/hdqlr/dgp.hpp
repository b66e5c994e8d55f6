#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hdqlr/baselines.hpp"
#include "hdqlr/data.hpp"
#include "hdqlr/inference.hpp"
#include "hdqlr/score.hpp"

namespace hdqlr {

// How Y depends on the covariates: Y = D + x_1 + eps, or Y = D + sum_j x_j + eps.
enum class OutcomeRule { kFirstColumn, kRowSum };

// kLatentSign: Z = 1{delta >= 0} (the instrument is the sign of the
// compliance latent). kIndependent: Z ~ Bernoulli(1/2) independent of delta.
enum class InstrumentRule { kLatentSign, kIndependent };

/// Threshold-crossing design: X ~ N(0, Sigma) with Sigma_jk = u^|j-k|,
/// delta ~ N(0, 1), D(0) = 1{Phi(delta) < p_at}, D(1) = 1{Phi(delta) < 1 - p_nt},
/// D = D(0)(1 - Z) + D(1) Z, Y = D + (outcome covariate term) + eps.
///
/// Draw order from Rng(seed): the n x dim_x standard normals column by column,
/// then delta (n), then eps (n), then for kIndependent n uniforms (Z = 1{U < 1/2}).
struct DgpConfig {
  std::size_t n = 500;
  std::size_t dim_x = 5;
  double p_at = 0.25;
  double p_nt = 0.25;
  double u = 0.5;
  std::uint64_t seed = 0;
  OutcomeRule outcome = OutcomeRule::kFirstColumn;
  InstrumentRule instrument = InstrumentRule::kLatentSign;

  void validate() const;
  std::string design_id() const;
};

// Named regimes: strong (0.25, 0.25), weak (0.45, 0.45), unidentified (0.49, 0.49).
DgpConfig design_preset(const std::string& name);

struct SimulatedSample {
  Dataset data;
  std::vector<int> d0;
  std::vector<int> d1;
  Eigen::VectorXd y0;
  Eigen::VectorXd y1;

  // Share of units with D(1) = 1 and D(0) = 0.
  double complier_share() const;
  // mean(Y(1) - Y(0)) over compliers.
  double complier_effect() const;
};

// Lower Cholesky factor of the Toeplitz covariance.
Eigen::MatrixXd toeplitz_cholesky(std::size_t dim_x, double u);

SimulatedSample generate_sample(const DgpConfig& cfg);
SimulatedSample generate_sample(const DgpConfig& cfg, const Eigen::MatrixXd& cholesky);
Dataset generate(const DgpConfig& cfg);

/// Population nuisances of the design in the score's parameterization
/// (logit first stage and propensity, linear reduced form). Throws ConfigError
/// when a conditional treatment probability is 0 or 1 (logit index infinite).
NuisanceFit true_nuisances(const DgpConfig& cfg, double clip_epsilon = 0.01);

struct PowerOptions {
  std::vector<Method> methods{Method::kHdqlr};
  std::vector<double> theta_values{1.0};
  int reps = 500;
  // grid (Theta) defaults to [-9, 11] with 401 points when unset.
  InferenceConfig inference;
  int jobs = 1;
  double max_failure_fraction = 0.01;
};

struct PowerCurve {
  std::vector<double> theta_values;
  std::vector<Method> methods;
  // rejection_rate[method][theta]
  std::vector<std::vector<double>> rejection_rate;
  std::vector<int> completed;
  std::vector<int> failures;
  int reps = 0;
  double alpha = 0.05;
  DgpConfig design;
};

/// Replication r draws its dataset from derive_seed(design.seed, {r, 0}) and
/// its cross-fitting / critical-value seed from derive_seed(design.seed, {r, 1}),
/// so results do not depend on jobs. Replications where a method raises a
/// library error are excluded for that method; more than max_failure_fraction
/// failures aborts with NumericalError.
PowerCurve power_experiment(const DgpConfig& design, const PowerOptions& options);

// Tidy CSV: theta,method,rate,reps,design_id
void write_power_csv(const PowerCurve& curve, std::ostream& out);

}  // namespace hdqlr
