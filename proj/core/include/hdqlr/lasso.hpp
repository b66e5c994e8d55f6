#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace hdqlr {

enum class Family { kGaussian, kBinomial };

/// l1-penalized regression problem.
///
/// Objective (gaussian):  mean((y - b0 - X beta)^2)        + (lambda / n) * sum_j w_j |beta_j|
/// Objective (binomial):  -mean(y eta - log(1 + e^eta))    + (lambda / n) * sum_j w_j |beta_j|
/// with eta = b0 + X beta. w_j is the sample standard deviation of column j
/// when standardizing (1 for constant columns), otherwise 1. b0 is fixed at 0
/// unless the unpenalized intercept is enabled.
struct LassoProblem {
  Eigen::MatrixXd design;
  Eigen::VectorXd response;
  double lambda = 0.0;
  Family family = Family::kGaussian;
};

struct LassoOptions {
  double coefficient_tolerance = 1e-7;
  double kkt_tolerance = 1e-6;
  int max_iterations = 10000;
  bool standardize = true;
  bool unpenalized_intercept = false;
  // Record the penalized objective after every outer iteration.
  bool trace = false;
};

struct LassoSolution {
  Eigen::VectorXd coefficients;
  double intercept = 0.0;
  double objective_value = 0.0;
  int iterations = 0;
  bool converged = false;
  double kkt_violation = 0.0;
  std::vector<double> objective_trace;

  std::size_t support_size() const;
};

/// Cyclic coordinate descent with soft-thresholding and active-set sweeps.
LassoSolution solve_lasso_ols(const LassoProblem& problem, const LassoOptions& options = {});

/// Proximal Newton: IRLS quadratic model, weighted coordinate descent inner
/// solve, backtracking on the true objective. Throws SeparationError when
/// lambda = 0 and the likelihood has no finite maximizer.
LassoSolution solve_lasso_logit(const LassoProblem& problem, const LassoOptions& options = {});

// Dispatches on problem.family.
LassoSolution solve_lasso(const LassoProblem& problem, const LassoOptions& options = {});

// scale * sqrt(n * log(p * n)).
double default_penalty(std::size_t n, std::size_t p, double scale);

// Penalty weights w_j used by the solvers for this design.
Eigen::VectorXd penalty_weights(const Eigen::MatrixXd& design, const LassoOptions& options);

double lasso_objective(const LassoProblem& problem, const LassoOptions& options,
                       const Eigen::VectorXd& coefficients, double intercept);

// Largest subgradient-optimality slack over all coordinates.
double lasso_kkt_violation(const LassoProblem& problem, const LassoOptions& options,
                           const Eigen::VectorXd& coefficients, double intercept);

inline double logistic(double t) {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

// log(1 + exp(t)) without overflow.
inline double log1p_exp(double t) { return t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

// Unpenalized fits used by the AM16 baseline.

struct MleOptions {
  int max_iterations = 50;
  double tolerance = 1e-10;
  double ridge_jitter = 1e-10;
};

struct MleFit {
  Eigen::VectorXd coefficients;
  int iterations = 0;
  bool converged = false;
  // Fitted probabilities reached 0 or 1 (quasi-separation); coefficients are the
  // last damped-Newton iterate.
  bool separated = false;
};

/// Maximum-likelihood logit by damped Newton. Throws SingularFitError when the
/// design has rank < columns (including n <= columns).
MleFit fit_logit_mle(const Eigen::MatrixXd& design, const Eigen::VectorXd& response,
                     const MleOptions& options = {});

/// Ordinary least squares via column-pivoting QR. Throws SingularFitError on rank deficiency.
Eigen::VectorXd fit_ols(const Eigen::MatrixXd& design, const Eigen::VectorXd& response);

}  // namespace hdqlr
