#include "hdqlr/crossfit.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "hdqlr/error.hpp"

namespace hdqlr {

namespace {

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& source, std::span<const std::size_t> rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), source.cols());
  for (Eigen::Index j = 0; j < source.cols(); ++j) {
    for (std::size_t r = 0; r < rows.size(); ++r) {
      out(static_cast<Eigen::Index>(r), j) = source(static_cast<Eigen::Index>(rows[r]), j);
    }
  }
  return out;
}

Eigen::VectorXd gather(const Eigen::VectorXd& source, std::span<const std::size_t> rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out[static_cast<Eigen::Index>(r)] = source[static_cast<Eigen::Index>(rows[r])];
  }
  return out;
}

LassoSolution solve_checked(LassoProblem problem, const LassoOptions& options, const char* what) {
  LassoSolution sol = solve_lasso(problem, options);
  if (!sol.converged) {
    throw ConvergenceError(std::string(what) + " lasso did not converge in " +
                           std::to_string(sol.iterations) + " iterations (KKT slack " +
                           std::to_string(sol.kkt_violation) + ")");
  }
  return sol;
}

Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& design) {
  Eigen::MatrixXd out(design.rows(), design.cols() + 1);
  out.col(0).setOnes();
  out.rightCols(design.cols()) = design;
  return out;
}

}  // namespace

KernelMoments compute_moments(const ScoreDecomposition& scores) {
  KernelMoments m;
  m.n = scores.size();
  if (m.n == 0) return m;
  const double n = static_cast<double>(m.n);
  m.mean_a = scores.psi_a.mean();
  m.mean_b = scores.psi_b.mean();
  const Eigen::ArrayXd ca = scores.psi_a.array() - m.mean_a;
  const Eigen::ArrayXd cb = scores.psi_b.array() - m.mean_b;
  m.c_aa = ca.square().sum() / n;
  m.c_ab = (ca * cb).sum() / n;
  m.c_bb = cb.square().sum() / n;
  return m;
}

double q_hat(const KernelMoments& m, double theta) {
  return std::sqrt(static_cast<double>(m.n)) * (m.mean_a * theta + m.mean_b);
}

NuisanceFit fit_nuisances(const Dataset& ds, std::span<const std::size_t> rows,
                          const CrossfitOptions& options, FoldDiagnostics* diagnostics) {
  const std::size_t p = ds.p();
  const Eigen::MatrixXd x = gather_rows(ds.x(), rows);
  const Eigen::VectorXd d = gather(ds.d(), rows);
  const Eigen::VectorXd z = gather(ds.z(), rows);
  const Eigen::VectorXd y = gather(ds.y(), rows);
  Eigen::MatrixXd zx(x.rows(), x.cols() + 1);
  zx.col(0) = z;
  zx.rightCols(x.cols()) = x;

  NuisanceFit fit;
  fit.clip_epsilon = options.clip_epsilon;
  FoldDiagnostics diag;
  diag.train_size = rows.size();

  if (options.learner == NuisanceLearner::kLasso) {
    const double lambda = options.fixed_lambda
                              ? *options.fixed_lambda
                              : default_penalty(rows.size(), p, options.lambda_scale);
    diag.lambda = lambda;
    const LassoSolution first = solve_checked({zx, d, lambda, Family::kBinomial}, options.lasso,
                                              "first-stage");
    const LassoSolution propensity = solve_checked({x, z, lambda, Family::kBinomial},
                                                   options.lasso, "propensity");
    const LassoSolution reduced = solve_checked({zx, y, lambda, Family::kGaussian}, options.lasso,
                                                "reduced-form");
    fit.beta11 = first.coefficients[0];
    fit.beta12 = first.coefficients.tail(static_cast<Eigen::Index>(p));
    fit.first_stage_intercept = first.intercept;
    fit.gamma = propensity.coefficients;
    fit.propensity_intercept = propensity.intercept;
    fit.beta21 = reduced.coefficients[0];
    fit.beta22 = reduced.coefficients.tail(static_cast<Eigen::Index>(p));
    fit.reduced_form_intercept = reduced.intercept;
    diag.support_first_stage = first.support_size();
    diag.support_propensity = propensity.support_size();
    diag.support_reduced_form = reduced.support_size();
  } else {
    const bool intercept = options.lasso.unpenalized_intercept;
    const Eigen::Index offset = intercept ? 1 : 0;
    const Eigen::MatrixXd zx_design = intercept ? with_intercept(zx) : zx;
    const Eigen::MatrixXd x_design = intercept ? with_intercept(x) : x;
    const MleFit first = fit_logit_mle(zx_design, d);
    const MleFit propensity = fit_logit_mle(x_design, z);
    const Eigen::VectorXd reduced = fit_ols(zx_design, y);
    if (intercept) {
      fit.first_stage_intercept = first.coefficients[0];
      fit.propensity_intercept = propensity.coefficients[0];
      fit.reduced_form_intercept = reduced[0];
    }
    fit.beta11 = first.coefficients[offset];
    fit.beta12 = first.coefficients.tail(static_cast<Eigen::Index>(p));
    fit.gamma = propensity.coefficients.tail(static_cast<Eigen::Index>(p));
    fit.beta21 = reduced[offset];
    fit.beta22 = reduced.tail(static_cast<Eigen::Index>(p));
    diag.support_first_stage = p + 1;
    diag.support_propensity = p;
    diag.support_reduced_form = p + 1;
    diag.separated = first.separated || propensity.separated;
  }
  if (diagnostics) *diagnostics = diag;
  return fit;
}

CrossfitResult run_crossfit(const Dataset& ds, const CrossfitOptions& options) {
  CrossfitResult result;
  result.seed = options.seed;
  const std::size_t n = ds.n();

  if (!options.cross_fit) {
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    FoldDiagnostics diag;
    result.k = 1;
    result.fits.push_back(fit_nuisances(ds, all, options, &diag));
    result.scores = evaluate_score(ds, result.fits.front(), all);
    result.scores.fold_of.assign(n, 1);
    diag.fold = 1;
    diag.clipped = result.scores.clipped;
    result.diagnostics.push_back(diag);
    result.moments = compute_moments(result.scores);
    return result;
  }

  const FoldAssignment folds = assign_folds(n, options.k, options.seed);
  result.k = options.k;
  result.scores.psi_a.resize(static_cast<Eigen::Index>(n));
  result.scores.psi_b.resize(static_cast<Eigen::Index>(n));
  result.scores.fold_of = folds.fold_of;
  for (int f = 1; f <= options.k; ++f) {
    const std::vector<std::size_t> train = folds.complement(f);
    const std::vector<std::size_t> held_out = folds.members(f);
    FoldDiagnostics diag;
    NuisanceFit fit;
    try {
      fit = fit_nuisances(ds, train, options, &diag);
    } catch (const NumericalError& e) {
      const std::string where = "fold " + std::to_string(f) + ": " + e.what();
      if (dynamic_cast<const SingularFitError*>(&e)) throw SingularFitError(where);
      if (dynamic_cast<const SeparationError*>(&e)) throw SeparationError(where);
      if (dynamic_cast<const ConvergenceError*>(&e)) throw ConvergenceError(where);
      throw NumericalError(where);
    }
    const ScoreDecomposition part = evaluate_score(ds, fit, held_out);
    for (std::size_t r = 0; r < held_out.size(); ++r) {
      const auto i = static_cast<Eigen::Index>(held_out[r]);
      result.scores.psi_a[i] = part.psi_a[static_cast<Eigen::Index>(r)];
      result.scores.psi_b[i] = part.psi_b[static_cast<Eigen::Index>(r)];
    }
    result.scores.clipped += part.clipped;
    diag.fold = f;
    diag.clipped = part.clipped;
    result.diagnostics.push_back(diag);
    result.fits.push_back(std::move(fit));
  }
  result.moments = compute_moments(result.scores);
  return result;
}

std::vector<CrossfitResult> repeat_crossfit(const Dataset& ds, const CrossfitOptions& options,
                                            int reps) {
  if (reps < 1) throw ConfigError("repetitions must be at least 1");
  std::vector<CrossfitResult> out;
  out.reserve(static_cast<std::size_t>(reps));
  for (int r = 1; r <= reps; ++r) {
    CrossfitOptions rep = options;
    rep.seed = options.seed + static_cast<std::uint64_t>(r);
    out.push_back(run_crossfit(ds, rep));
  }
  return out;
}

}  // namespace hdqlr
