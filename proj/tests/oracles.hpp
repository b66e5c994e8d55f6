#pragma once

// Brute-force reference implementations used only by tests. Each one follows
// the defining formula directly and shares no code with the library path it
// checks.

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "hdqlr/lasso.hpp"

namespace hdqlr::oracle {

struct Scores {
  std::vector<double> a;
  std::vector<double> b;
  double psi(std::size_t i, double theta) const { return a[i] * theta + b[i]; }
  std::size_t n() const { return a.size(); }
};

// (1/N) sum_i psi_i(t1) psi_i(t2) - (1/N^2) sum_i sum_i' psi_i(t1) psi_i'(t2).
inline double omega_double_sum(const Scores& s, double t1, double t2) {
  const double n = static_cast<double>(s.n());
  double first = 0.0;
  for (std::size_t i = 0; i < s.n(); ++i) first += s.psi(i, t1) * s.psi(i, t2);
  double second = 0.0;
  for (std::size_t i = 0; i < s.n(); ++i) {
    for (std::size_t j = 0; j < s.n(); ++j) second += s.psi(i, t1) * s.psi(j, t2);
  }
  return first / n - second / (n * n);
}

// (1/sqrt(N)) sum_i psi_i(theta).
inline double q_direct_sum(const Scores& s, double theta) {
  double sum = 0.0;
  for (std::size_t i = 0; i < s.n(); ++i) sum += s.psi(i, theta);
  return sum / std::sqrt(static_cast<double>(s.n()));
}

inline double h_naive(const Scores& s, double theta0, double theta) {
  return q_direct_sum(s, theta) -
         omega_double_sum(s, theta, theta0) / omega_double_sum(s, theta0, theta0) * q_direct_sum(s, theta0);
}

// Uncentered raw sums; a second algebraic route to Omega usable on dense grids.
struct RawSums {
  double n = 0, sa = 0, sb = 0, saa = 0, sab = 0, sbb = 0;
  explicit RawSums(const Scores& s) {
    n = static_cast<double>(s.n());
    for (std::size_t i = 0; i < s.n(); ++i) {
      sa += s.a[i];
      sb += s.b[i];
      saa += s.a[i] * s.a[i];
      sab += s.a[i] * s.b[i];
      sbb += s.b[i] * s.b[i];
    }
  }
  double omega(double t1, double t2) const {
    const double cross = (t1 * t2 * saa + t1 * sab + t2 * sab + sbb) / n;
    return cross - (t1 * sa + sb) / n * (t2 * sa + sb) / n;
  }
  double q(double theta) const { return (theta * sa + sb) / std::sqrt(n); }
};

// Inner objective minimized over a uniform grid of `points` values in [lo, hi].
inline double dense_infimum(const RawSums& r, double xi, double theta0, double lo, double hi, int points) {
  const double v00 = r.omega(theta0, theta0);
  const double q0 = r.q(theta0);
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < points; ++i) {
    const double theta = lo + (hi - lo) * static_cast<double>(i) / (points - 1);
    const double cov = r.omega(theta, theta0);
    const double h = r.q(theta) - cov / v00 * q0;
    const double inner = cov / v00 * xi + h;
    best = std::min(best, inner * inner / r.omega(theta, theta));
  }
  return best;
}

inline double dense_r_statistic(const RawSums& r, double xi, double theta0, double lo, double hi, int points) {
  return xi * xi / r.omega(theta0, theta0) - dense_infimum(r, xi, theta0, lo, hi, points);
}

// Minimizer of a 1-D function over a uniform grid.
inline double grid_argmin(const std::function<double(double)>& f, double lo, double hi, double step) {
  double best_x = lo;
  double best = f(lo);
  const auto steps = static_cast<long>(std::ceil((hi - lo) / step));
  for (long i = 1; i <= steps; ++i) {
    const double x = lo + step * static_cast<double>(i);
    const double v = f(x);
    if (v < best) {
      best = v;
      best_x = x;
    }
  }
  return best_x;
}

// Maximum-likelihood logit by Newton-Raphson with step halving.
inline Eigen::VectorXd newton_logit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(x.cols());
  auto loglik = [&](const Eigen::VectorXd& b) {
    double ll = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const double eta = x.row(i).dot(b);
      ll += y[i] * eta - std::log1p(std::exp(eta));
    }
    return ll;
  };
  for (int iter = 0; iter < 100; ++iter) {
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(x.cols());
    Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(x.cols(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const double p = 1.0 / (1.0 + std::exp(-x.row(i).dot(beta)));
      grad += (y[i] - p) * x.row(i).transpose();
      hess += p * (1 - p) * x.row(i).transpose() * x.row(i);
    }
    Eigen::VectorXd step = hess.ldlt().solve(grad);
    double t = 1.0;
    const double base = loglik(beta);
    while (loglik(beta + t * step) < base && t > 1e-8) t *= 0.5;
    beta += t * step;
    if ((t * step).cwiseAbs().maxCoeff() < 1e-13) break;
  }
  return beta;
}

// Subgradient slack computed from the objective definition, coordinate by coordinate.
inline double kkt_slack(const LassoProblem& prob, const LassoOptions& opts, const LassoSolution& sol) {
  const double n = static_cast<double>(prob.design.rows());
  double worst = 0.0;
  for (Eigen::Index j = 0; j < prob.design.cols(); ++j) {
    double grad = 0.0;
    double mean = prob.design.col(j).mean();
    double var = 0.0;
    for (Eigen::Index i = 0; i < prob.design.rows(); ++i) {
      const double eta = sol.intercept + prob.design.row(i).dot(sol.coefficients);
      const double deriv = prob.family == Family::kGaussian
                               ? -2.0 * (prob.response[i] - eta)
                               : 1.0 / (1.0 + std::exp(-eta)) - prob.response[i];
      grad += prob.design(i, j) * deriv / n;
      var += (prob.design(i, j) - mean) * (prob.design(i, j) - mean) / (n - 1);
    }
    const double w = opts.standardize && var > 0 ? std::sqrt(var) : 1.0;
    const double bound = prob.lambda / n * w;
    const double b = sol.coefficients[j];
    const double slack = b > 0 ? std::abs(grad + bound) : b < 0 ? std::abs(grad - bound)
                                                                : std::max(0.0, std::abs(grad) - bound);
    worst = std::max(worst, slack);
  }
  return worst;
}

// Regression slope of log(err) on log(t).
inline double log_log_slope(const std::vector<double>& t, const std::vector<double>& err) {
  double mx = 0, my = 0;
  const double k = static_cast<double>(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    mx += std::log(t[i]) / k;
    my += std::log(err[i]) / k;
  }
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    sxy += (std::log(t[i]) - mx) * (std::log(err[i]) - my);
    sxx += (std::log(t[i]) - mx) * (std::log(t[i]) - mx);
  }
  return sxy / sxx;
}

}  // namespace hdqlr::oracle
