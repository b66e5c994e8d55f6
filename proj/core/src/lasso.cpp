#include "hdqlr/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hdqlr/error.hpp"

namespace hdqlr {

namespace {

double soft_threshold(double value, double threshold) {
  if (value > threshold) return value - threshold;
  if (value < -threshold) return value + threshold;
  return 0.0;
}

void check_problem(const LassoProblem& problem, Family expected) {
  if (problem.family != expected) throw ConfigError("lasso: wrong family for this solver");
  if (!(problem.lambda >= 0.0) || !std::isfinite(problem.lambda)) {
    throw ConfigError("lasso: lambda must be finite and non-negative");
  }
  if (problem.design.rows() != problem.response.size() || problem.design.rows() == 0) {
    throw ConfigError("lasso: design and response sizes differ");
  }
  if (!problem.design.allFinite() || !problem.response.allFinite()) {
    throw ConfigError("lasso: non-finite design or response");
  }
  if (expected == Family::kBinomial &&
      !(problem.response.array() == 0.0 || problem.response.array() == 1.0).all()) {
    throw ConfigError("lasso: binomial response must be 0/1");
  }
}

Eigen::VectorXd linear_predictor(const LassoProblem& problem, const Eigen::VectorXd& beta,
                                 double intercept) {
  Eigen::VectorXd eta = problem.design * beta;
  eta.array() += intercept;
  return eta;
}

double mean_loss(const LassoProblem& problem, const Eigen::VectorXd& eta) {
  const auto n = static_cast<double>(eta.size());
  if (problem.family == Family::kGaussian) {
    return (problem.response - eta).squaredNorm() / n;
  }
  double sum = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    sum += log1p_exp(eta[i]) - problem.response[i] * eta[i];
  }
  return sum / n;
}

double penalty_term(const LassoProblem& problem, const Eigen::VectorXd& weights,
                    const Eigen::VectorXd& beta) {
  const auto n = static_cast<double>(problem.design.rows());
  return problem.lambda / n * (weights.array() * beta.array().abs()).sum();
}

// Gradient of the mean loss with respect to eta, times n: sum_i x_ij * dloss_i.
Eigen::VectorXd loss_derivative(const LassoProblem& problem, const Eigen::VectorXd& eta) {
  if (problem.family == Family::kGaussian) return -2.0 * (problem.response - eta);
  Eigen::VectorXd out(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) out[i] = logistic(eta[i]) - problem.response[i];
  return out;
}

}  // namespace

std::size_t LassoSolution::support_size() const {
  return static_cast<std::size_t>((coefficients.array() != 0.0).count());
}

double default_penalty(std::size_t n, std::size_t p, double scale) {
  if (n < 2) throw ConfigError("default_penalty: n must be at least 2");
  if (p < 1) throw ConfigError("default_penalty: p must be at least 1");
  if (!(scale > 0.0)) throw ConfigError("default_penalty: scale must be positive");
  const double nd = static_cast<double>(n);
  return scale * std::sqrt(nd * std::log(static_cast<double>(p) * nd));
}

Eigen::VectorXd penalty_weights(const Eigen::MatrixXd& design, const LassoOptions& options) {
  Eigen::VectorXd w = Eigen::VectorXd::Ones(design.cols());
  if (!options.standardize || design.rows() < 2) return w;
  const double n = static_cast<double>(design.rows());
  for (Eigen::Index j = 0; j < design.cols(); ++j) {
    const double mean = design.col(j).mean();
    const double var = (design.col(j).array() - mean).square().sum() / (n - 1.0);
    if (var > 0.0) w[j] = std::sqrt(var);
  }
  return w;
}

double lasso_objective(const LassoProblem& problem, const LassoOptions& options,
                       const Eigen::VectorXd& coefficients, double intercept) {
  const Eigen::VectorXd w = penalty_weights(problem.design, options);
  return mean_loss(problem, linear_predictor(problem, coefficients, intercept)) +
         penalty_term(problem, w, coefficients);
}

double lasso_kkt_violation(const LassoProblem& problem, const LassoOptions& options,
                           const Eigen::VectorXd& coefficients, double intercept) {
  const Eigen::VectorXd w = penalty_weights(problem.design, options);
  const Eigen::VectorXd eta = linear_predictor(problem, coefficients, intercept);
  const Eigen::VectorXd dloss = loss_derivative(problem, eta);
  const double n = static_cast<double>(problem.design.rows());
  const Eigen::VectorXd grad = problem.design.transpose() * dloss / n;
  double worst = 0.0;
  for (Eigen::Index j = 0; j < grad.size(); ++j) {
    const double bound = problem.lambda / n * w[j];
    double slack;
    if (coefficients[j] > 0.0) {
      slack = std::abs(grad[j] + bound);
    } else if (coefficients[j] < 0.0) {
      slack = std::abs(grad[j] - bound);
    } else {
      slack = std::max(0.0, std::abs(grad[j]) - bound);
    }
    worst = std::max(worst, slack);
  }
  if (options.unpenalized_intercept) worst = std::max(worst, std::abs(dloss.sum() / n));
  return worst;
}

LassoSolution solve_lasso_ols(const LassoProblem& problem, const LassoOptions& options) {
  check_problem(problem, Family::kGaussian);
  const Eigen::MatrixXd& x = problem.design;
  const Eigen::Index n = x.rows();
  const Eigen::Index q = x.cols();
  const double nd = static_cast<double>(n);
  // Coordinate-wise curvature mean(x_j^2); the weights w_j play the role of the
  // standardization scale, so this is coordinate descent on standardized
  // columns expressed in original units.
  const Eigen::VectorXd w = penalty_weights(x, options);
  const Eigen::VectorXd curvature = x.colwise().squaredNorm().transpose() / nd;
  const Eigen::VectorXd threshold = problem.lambda / (2.0 * nd) * w;

  LassoSolution sol;
  sol.coefficients = Eigen::VectorXd::Zero(q);
  double& b0 = sol.intercept;
  Eigen::VectorXd residual = problem.response;
  if (options.unpenalized_intercept) {
    b0 = residual.mean();
    residual.array() -= b0;
  }

  std::vector<char> active(static_cast<std::size_t>(q), 0);
  auto sweep = [&](bool full) {
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < q; ++j) {
      if (!full && !active[static_cast<std::size_t>(j)]) continue;
      if (curvature[j] <= 0.0) continue;
      const double old = sol.coefficients[j];
      const double g = x.col(j).dot(residual) / nd + curvature[j] * old;
      const double updated = soft_threshold(g, threshold[j]) / curvature[j];
      if (updated != old) {
        residual.noalias() -= (updated - old) * x.col(j);
        sol.coefficients[j] = updated;
        max_change = std::max(max_change, std::abs(updated - old));
      }
      if (updated != 0.0) active[static_cast<std::size_t>(j)] = 1;
    }
    if (options.unpenalized_intercept) {
      const double shift = residual.mean();
      b0 += shift;
      residual.array() -= shift;
      max_change = std::max(max_change, std::abs(shift));
    }
    return max_change;
  };

  auto record = [&] {
    if (options.trace) {
      sol.objective_trace.push_back(lasso_objective(problem, options, sol.coefficients, b0));
    }
  };

  while (sol.iterations < options.max_iterations) {
    const double full_change = sweep(true);
    ++sol.iterations;
    record();
    if (full_change < options.coefficient_tolerance) {
      sol.kkt_violation = lasso_kkt_violation(problem, options, sol.coefficients, b0);
      if (sol.kkt_violation <= options.kkt_tolerance) {
        sol.converged = true;
        break;
      }
      continue;
    }
    while (sol.iterations < options.max_iterations) {
      const double change = sweep(false);
      ++sol.iterations;
      record();
      if (change < options.coefficient_tolerance) break;
    }
  }
  sol.kkt_violation = lasso_kkt_violation(problem, options, sol.coefficients, b0);
  sol.converged = sol.converged && sol.kkt_violation <= options.kkt_tolerance;
  sol.objective_value = lasso_objective(problem, options, sol.coefficients, b0);
  return sol;
}

LassoSolution solve_lasso_logit(const LassoProblem& problem, const LassoOptions& options) {
  check_problem(problem, Family::kBinomial);
  const Eigen::MatrixXd& x = problem.design;
  const Eigen::Index n = x.rows();
  const Eigen::Index q = x.cols();
  const double nd = static_cast<double>(n);
  const Eigen::VectorXd w = penalty_weights(x, options);
  const Eigen::VectorXd threshold = problem.lambda / nd * w;
  const bool unpenalized = problem.lambda == 0.0;

  LassoSolution sol;
  sol.coefficients = Eigen::VectorXd::Zero(q);
  double& b0 = sol.intercept;
  auto objective = [&](const Eigen::VectorXd& beta, double intercept) {
    return mean_loss(problem, linear_predictor(problem, beta, intercept)) +
           penalty_term(problem, w, beta);
  };
  double current = objective(sol.coefficients, b0);
  if (options.trace) sol.objective_trace.push_back(current);

  constexpr double kMinWeight = 1e-5;
  constexpr int kMaxInnerSweeps = 2000;
  const double inner_tolerance = options.coefficient_tolerance * 1e-2;

  Eigen::VectorXd eta(n), weight(n), residual(n), curvature(q);
  std::vector<char> active(static_cast<std::size_t>(q), 0);

  while (sol.iterations < options.max_iterations) {
    ++sol.iterations;
    eta = linear_predictor(problem, sol.coefficients, b0);
    if (unpenalized && eta.cwiseAbs().maxCoeff() > 40.0) {
      throw SeparationError("logit: data are separated, maximum likelihood estimate does not exist");
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      const double prob = logistic(eta[i]);
      weight[i] = std::max(prob * (1.0 - prob), kMinWeight);
      // Working residual z - eta for the quadratic model.
      residual[i] = (problem.response[i] - prob) / weight[i];
    }
    for (Eigen::Index j = 0; j < q; ++j) {
      curvature[j] = x.col(j).cwiseAbs2().dot(weight) / nd;
    }

    Eigen::VectorXd beta = sol.coefficients;
    double intercept = b0;
    auto sweep = [&](bool full) {
      double max_change = 0.0;
      for (Eigen::Index j = 0; j < q; ++j) {
        if (!full && !active[static_cast<std::size_t>(j)]) continue;
        if (curvature[j] <= 0.0) continue;
        const double old = beta[j];
        const double g = x.col(j).cwiseProduct(weight).dot(residual) / nd + curvature[j] * old;
        const double updated = soft_threshold(g, threshold[j]) / curvature[j];
        if (updated != old) {
          residual.noalias() -= (updated - old) * x.col(j);
          beta[j] = updated;
          max_change = std::max(max_change, std::abs(updated - old));
        }
        if (updated != 0.0) active[static_cast<std::size_t>(j)] = 1;
      }
      if (options.unpenalized_intercept) {
        const double shift = weight.dot(residual) / weight.sum();
        intercept += shift;
        residual.array() -= shift;
        max_change = std::max(max_change, std::abs(shift));
      }
      return max_change;
    };
    for (int s = 0; s < kMaxInnerSweeps; ++s) {
      if (sweep(true) < inner_tolerance) break;
      for (int t = 0; t < kMaxInnerSweeps; ++t) {
        if (sweep(false) < inner_tolerance) break;
      }
    }

    // Backtracking so the true objective never increases.
    const Eigen::VectorXd direction = beta - sol.coefficients;
    const double intercept_direction = intercept - b0;
    double step = 1.0;
    Eigen::VectorXd candidate = beta;
    double candidate_intercept = intercept;
    double value = objective(candidate, candidate_intercept);
    for (int halvings = 0; value > current && halvings < 50; ++halvings) {
      step *= 0.5;
      candidate = sol.coefficients + step * direction;
      candidate_intercept = b0 + step * intercept_direction;
      value = objective(candidate, candidate_intercept);
    }
    if (value > current) {
      candidate = sol.coefficients;
      candidate_intercept = b0;
      value = current;
    }
    const double change = std::max((candidate - sol.coefficients).cwiseAbs().maxCoeff(),
                                   std::abs(candidate_intercept - b0));
    sol.coefficients = candidate;
    b0 = candidate_intercept;
    current = value;
    if (options.trace) sol.objective_trace.push_back(current);

    if (change < options.coefficient_tolerance) {
      sol.kkt_violation = lasso_kkt_violation(problem, options, sol.coefficients, b0);
      if (sol.kkt_violation <= options.kkt_tolerance) {
        sol.converged = true;
        break;
      }
      if (change == 0.0) break;  // no descent possible from here
    }
  }
  if (unpenalized && !sol.converged) {
    throw SeparationError("logit: no finite maximizer found at lambda = 0 (separation)");
  }
  sol.kkt_violation = lasso_kkt_violation(problem, options, sol.coefficients, b0);
  sol.objective_value = objective(sol.coefficients, b0);
  return sol;
}

LassoSolution solve_lasso(const LassoProblem& problem, const LassoOptions& options) {
  return problem.family == Family::kGaussian ? solve_lasso_ols(problem, options)
                                             : solve_lasso_logit(problem, options);
}

MleFit fit_logit_mle(const Eigen::MatrixXd& design, const Eigen::VectorXd& response,
                     const MleOptions& options) {
  const Eigen::Index n = design.rows();
  const Eigen::Index q = design.cols();
  if (n <= q) {
    throw SingularFitError("logit MLE: " + std::to_string(q) + " regressors need more than " +
                           std::to_string(n) + " observations");
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < q) {
    throw SingularFitError("logit MLE: design has rank " + std::to_string(qr.rank()) + " < " +
                           std::to_string(q));
  }

  auto log_likelihood = [&](const Eigen::VectorXd& eta) {
    double ll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) ll += response[i] * eta[i] - log1p_exp(eta[i]);
    return ll;
  };

  MleFit fit;
  fit.coefficients = Eigen::VectorXd::Zero(q);
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(n);
  double ll = log_likelihood(eta);
  Eigen::VectorXd prob(n), weight(n);
  for (fit.iterations = 0; fit.iterations < options.max_iterations; ++fit.iterations) {
    for (Eigen::Index i = 0; i < n; ++i) {
      prob[i] = logistic(eta[i]);
      weight[i] = prob[i] * (1.0 - prob[i]);
    }
    const Eigen::VectorXd gradient = design.transpose() * (response - prob);
    Eigen::MatrixXd hessian = design.transpose() * weight.asDiagonal() * design;
    hessian.diagonal().array() += options.ridge_jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(hessian);
    if (llt.info() != Eigen::Success) {
      // The design has full rank, so this is weight collapse from separation.
      fit.separated = true;
      break;
    }
    const Eigen::VectorXd step = llt.solve(gradient);
    double scale = 1.0;
    Eigen::VectorXd candidate = fit.coefficients + step;
    Eigen::VectorXd candidate_eta = design * candidate;
    double candidate_ll = log_likelihood(candidate_eta);
    for (int h = 0; h < 30 && !(candidate_ll >= ll); ++h) {
      scale *= 0.5;
      candidate = fit.coefficients + scale * step;
      candidate_eta = design * candidate;
      candidate_ll = log_likelihood(candidate_eta);
    }
    if (!(candidate_ll >= ll)) break;
    const double improvement = candidate_ll - ll;
    fit.coefficients = candidate;
    eta = candidate_eta;
    ll = candidate_ll;
    if (improvement <= options.tolerance * (std::abs(ll) + options.tolerance)) {
      fit.converged = true;
      break;
    }
  }
  const double extreme = eta.cwiseAbs().maxCoeff();
  if (extreme > 30.0) fit.separated = true;
  return fit;
}

Eigen::VectorXd fit_ols(const Eigen::MatrixXd& design, const Eigen::VectorXd& response) {
  if (design.rows() < design.cols()) {
    throw SingularFitError("OLS: " + std::to_string(design.cols()) + " regressors exceed " +
                           std::to_string(design.rows()) + " observations");
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < design.cols()) {
    throw SingularFitError("OLS: design has rank " + std::to_string(qr.rank()) + " < " +
                           std::to_string(design.cols()));
  }
  return qr.solve(response);
}

}  // namespace hdqlr
