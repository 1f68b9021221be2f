#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "cccov/dataset.hpp"
#include "cccov/model.hpp"

namespace cccov {

enum class InitKind { ClosedFormLinear, Zeros, UserSupplied };

struct SolverOptions {
  double tol_step = 1e-10;
  double tol_residual = 1e-10;
  int max_iter = 100;
  InitKind init = InitKind::ClosedFormLinear;
  ParamVector init_beta;  // read only when init == UserSupplied
  // When set, receives the residual sum of squares after every accepted
  // line-search step (diagnostics; the sequence must be non-increasing).
  std::vector<double>* rss_trace = nullptr;

  void validate() const {
    if (!(tol_step > 0.0) || !(tol_residual > 0.0))
      throw ArgumentError("solver tolerances must be > 0");
    if (max_iter < 1) throw ArgumentError("max_iter must be >= 1");
  }
};

struct FitResult {
  ParamVector beta_hat;
  Eigen::MatrixXd cov;  // sandwich estimate of the asymptotic covariance
  Eigen::VectorXd se;   // sqrt(diag(cov) / n_total); NaN when unavailable
  Eigen::MatrixX2d ci;  // 95% Wald interval per parameter
  int n_total = 0;
  int n_used = 0;
  int iterations = 0;
  bool converged = false;
};

namespace detail {

// Row indices usable by the complete-case estimating equation.
inline std::vector<int> complete_rows(const Dataset& data) {
  std::vector<int> idx;
  idx.reserve(data.n());
  for (int i = 0; i < data.n(); ++i)
    if (data.delta[i] == 1) idx.push_back(i);
  return idx;
}

// Least squares of resp on the regressor rows of the given cases, solved by
// column-pivoted QR on the stacked design. Throws on rank deficiency.
inline ParamVector ls_on_rows(const Dataset& data, const MeanModelSpec& spec,
                              const std::vector<int>& rows,
                              const Eigen::VectorXd& resp) {
  const int k = spec.n_params();
  Eigen::MatrixXd design(rows.size(), k);
  Eigen::VectorXd rhs(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    int i = rows[r];
    design.row(r) = regressor_row(spec, data.w[i], data.z.row(i)).transpose();
    rhs[r] = resp[i];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < k)
    throw SingularityError("complete-case design matrix is rank deficient (rank " +
                           std::to_string(qr.rank()) + " < " + std::to_string(k) + ")");
  return qr.solve(rhs);
}

}  // namespace detail

// Exact least-squares solution of the complete-case estimating equation for
// the linear family: beta = (sum_i delta_i u_i u_i')^{-1} sum_i delta_i u_i y_i.
inline ParamVector closed_form_linear(const Dataset& data,
                                      const MeanModelSpec& spec) {
  if (spec.family != Family::Linear)
    throw ArgumentError("closed_form_linear requires the linear family");
  auto rows = detail::complete_rows(data);
  if (rows.empty()) throw UnderIdentifiedError("no complete cases");
  return detail::ls_on_rows(data, spec, rows, data.y);
}

// Sandwich estimate of the asymptotic covariance at beta, plus the per
// parameter standard errors sqrt(diag / n). A_hat is the exact Jacobian of
// the summand, including the curvature term of the mean (zero for the
// linear family); censored rows contribute zero to both sums, which still
// run over all n.
inline std::pair<Eigen::MatrixXd, Eigen::VectorXd> sandwich_covariance(
    const Dataset& data, const MeanModelSpec& spec, const ParamVector& beta) {
  if (!beta.allFinite())
    throw ArgumentError("sandwich_covariance: beta has non-finite entries");
  const int k = spec.n_params();
  const int n = data.n();
  Eigen::MatrixXd a_hat = Eigen::MatrixXd::Zero(k, k);
  Eigen::MatrixXd b_hat = Eigen::MatrixXd::Zero(k, k);
  for (int i = 0; i < n; ++i) {
    if (data.delta[i] != 1) continue;
    Eigen::VectorXd zi = data.z.row(i);
    double resid = data.y[i] - mean_value(spec, beta, data.w[i], zi);
    Eigen::VectorXd g = mean_gradient(spec, beta, data.w[i], zi);
    a_hat += mean_hessian(spec, beta, data.w[i], zi) * resid - g * g.transpose();
    Eigen::VectorXd phi = g * resid;
    b_hat += phi * phi.transpose();
  }
  a_hat /= n;
  b_hat /= n;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a_hat);
  if (!lu.isInvertible())
    throw SingularityError("singular A-hat in the sandwich covariance");
  Eigen::MatrixXd a_inv = lu.inverse();
  Eigen::MatrixXd cov = a_inv * b_hat * a_inv.transpose();
  cov = 0.5 * (cov + cov.transpose()).eval();
  Eigen::VectorXd se(k);
  for (int j = 0; j < k; ++j)
    se[j] = std::sqrt(std::max(0.0, cov(j, j)) / n);
  return {cov, se};
}

// Wald interval per parameter: beta_hat +- q * se, q the standard normal
// (1 + level) / 2 quantile.
inline Eigen::MatrixX2d wald_ci(const FitResult& fit, double level) {
  if (!(level > 0.0) || !(level < 1.0))
    throw ArgumentError("confidence level must be in (0, 1)");
  boost::math::normal_distribution<double> stdnorm;
  double q = boost::math::quantile(stdnorm, 0.5 + level / 2.0);
  Eigen::MatrixX2d ci(fit.beta_hat.size(), 2);
  for (int j = 0; j < fit.beta_hat.size(); ++j) {
    ci(j, 0) = fit.beta_hat[j] - q * fit.se[j];
    ci(j, 1) = fit.beta_hat[j] + q * fit.se[j];
  }
  return ci;
}

namespace detail {

inline ParamVector initial_beta(const Dataset& data, const MeanModelSpec& spec,
                                const SolverOptions& opts,
                                const std::vector<int>& rows) {
  const int k = spec.n_params();
  switch (opts.init) {
    case InitKind::Zeros:
      return ParamVector::Zero(k);
    case InitKind::UserSupplied:
      if (static_cast<int>(opts.init_beta.size()) != k)
        throw ArgumentError("init_beta has length " +
                            std::to_string(opts.init_beta.size()) +
                            ", expected " + std::to_string(k));
      return opts.init_beta;
    case InitKind::ClosedFormLinear:
      break;
  }
  try {
    if (spec.family == Family::Linear)
      return ls_on_rows(data, spec, rows, data.y);
    // Scaled logistic: linear fit of the scale-adjusted logit of the
    // response, clipped into (0.01, 0.99).
    Eigen::VectorXd t(data.n());
    for (int i : rows) {
      double yc = std::clamp(data.y[i], 0.01, 0.99);
      t[i] = std::log(yc / (1.0 - yc)) / spec.scale;
    }
    return ls_on_rows(data, spec, rows, t);
  } catch (const SingularityError&) {
    return ParamVector::Zero(k);  // let the solver surface the problem
  }
}

struct EeState {
  Eigen::VectorXd score;   // sum_i delta_i A_i r_i  (n times the EE)
  Eigen::MatrixXd normal;  // sum_i delta_i A_i A_i'
  double rss = 0.0;        // sum_i delta_i r_i^2
};

inline EeState ee_state(const Dataset& data, const MeanModelSpec& spec,
                        const std::vector<int>& rows, const ParamVector& beta) {
  const int k = spec.n_params();
  EeState s;
  s.score = Eigen::VectorXd::Zero(k);
  s.normal = Eigen::MatrixXd::Zero(k, k);
  for (int i : rows) {
    Eigen::VectorXd zi = data.z.row(i);
    double resid = data.y[i] - mean_value(spec, beta, data.w[i], zi);
    Eigen::VectorXd g = mean_gradient(spec, beta, data.w[i], zi);
    s.score += g * resid;
    s.normal += g * g.transpose();
    s.rss += resid * resid;
  }
  return s;
}

inline double cc_rss(const Dataset& data, const MeanModelSpec& spec,
                     const std::vector<int>& rows, const ParamVector& beta) {
  double rss = 0.0;
  for (int i : rows) {
    double resid = data.y[i] - mean_value(spec, beta, data.w[i], data.z.row(i));
    rss += resid * resid;
  }
  return rss;
}

}  // namespace detail

// Solves the complete-case estimating equation
//   (1/n) sum_i delta_i A(w_i, z_i; beta) {y_i - m(w_i, z_i; beta)} = 0,
// with A = dm/dbeta, by Gauss-Newton on the complete-case residual sum of
// squares with step-halving. Censored rows are never read beyond delta.
inline FitResult fit_complete_case(const Dataset& data,
                                   const MeanModelSpec& spec,
                                   const SolverOptions& opts = {}) {
  opts.validate();
  const int k = spec.n_params();
  const int n = data.n();
  if (n < 1) throw ArgumentError("dataset is empty");
  if (data.w.size() != n || data.delta.size() != n || data.z.rows() != n)
    throw ArgumentError("dataset columns have inconsistent lengths");
  if (data.p() != spec.p)
    throw ArgumentError("dataset has " + std::to_string(data.p()) +
                        " z columns, model expects " + std::to_string(spec.p));

  auto rows = detail::complete_rows(data);
  const int n_used = static_cast<int>(rows.size());
  if (n_used < k)
    throw UnderIdentifiedError("under-identified: " + std::to_string(n_used) +
                               " complete cases for " + std::to_string(k) +
                               " parameters");
  for (int i : rows) {
    if (!std::isfinite(data.w[i]))
      throw ArgumentError("row " + std::to_string(i + 1) +
                          ": w is not finite on a complete case");
    if (!std::isfinite(data.y[i]) || !data.z.row(i).allFinite())
      throw ArgumentError("row " + std::to_string(i + 1) +
                          ": y and z must be finite on a complete case");
  }

  FitResult fit;
  fit.n_total = n;
  fit.n_used = n_used;
  fit.beta_hat = detail::initial_beta(data, spec, opts, rows);

  double rss = detail::cc_rss(data, spec, rows, fit.beta_hat);
  if (opts.rss_trace) opts.rss_trace->push_back(rss);

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    detail::EeState s = detail::ee_state(data, spec, rows, fit.beta_hat);
    fit.iterations = iter;
    if ((s.score / n).lpNorm<Eigen::Infinity>() <= opts.tol_residual) {
      fit.converged = true;
      break;
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(s.normal);
    if (!lu.isInvertible())
      throw SingularityError("singular Gauss-Newton normal matrix at iteration " +
                             std::to_string(iter));
    Eigen::VectorXd step = lu.solve(s.score);

    // Step-halving line search on the residual sum of squares. The
    // acceptance bound allows one part in 1e12 of slack: near the optimum
    // the true decrease falls below the floating-point resolution of the
    // objective, and the full Newton step still contracts the score.
    double t = 1.0;
    bool accepted = false;
    ParamVector beta_new;
    double rss_new = rss;
    for (int h = 0; h <= 20; ++h) {
      beta_new = fit.beta_hat + t * step;
      rss_new = detail::cc_rss(data, spec, rows, beta_new);
      if (std::isfinite(rss_new) && rss_new <= s.rss * (1.0 + 1e-12)) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;  // no descent direction left; report non-convergence

    fit.beta_hat = beta_new;
    rss = rss_new;
    fit.iterations = iter + 1;
    if (opts.rss_trace) opts.rss_trace->push_back(rss);
    if ((t * step).lpNorm<Eigen::Infinity>() <= opts.tol_step) {
      fit.converged = true;
      break;
    }
  }

  // Variance. An exact-fit sample (as many complete cases as parameters)
  // has no residual information; report not-available standard errors.
  const double na = std::numeric_limits<double>::quiet_NaN();
  if (n_used == k) {
    fit.cov = Eigen::MatrixXd::Constant(k, k, na);
    fit.se = Eigen::VectorXd::Constant(k, na);
  } else {
    try {
      auto [cov, se] = sandwich_covariance(data, spec, fit.beta_hat);
      fit.cov = cov;
      fit.se = se;
    } catch (const SingularityError&) {
      fit.cov = Eigen::MatrixXd::Constant(k, k, na);
      fit.se = Eigen::VectorXd::Constant(k, na);
    }
  }
  fit.ci = wald_ci(fit, 0.95);
  return fit;
}

// Infeasible oracle fit: the same solver with delta forced to 1 and the true
// x in place of w. Requires x_true on every row.
inline FitResult fit_oracle(const Dataset& data, const MeanModelSpec& spec,
                            const SolverOptions& opts = {}) {
  if (!data.x_true)
    throw ArgumentError("fit_oracle requires x_true for all rows");
  if (!data.x_true->allFinite())
    throw ArgumentError("fit_oracle: x_true has non-finite entries");
  Dataset oracle;
  oracle.y = data.y;
  oracle.w = *data.x_true;
  oracle.delta = Eigen::VectorXi::Ones(data.n());
  oracle.z = data.z;
  oracle.x_true = data.x_true;
  oracle.eps = data.eps;
  return fit_complete_case(oracle, spec, opts);
}

}  // namespace cccov
