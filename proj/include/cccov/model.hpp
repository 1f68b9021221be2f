#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "cccov/error.hpp"

namespace cccov {

using ParamVector = Eigen::VectorXd;

enum class Family { Linear, ScaledLogistic };

// Regression mean function family: which m(x, z; beta) we fit, whether it
// carries an intercept, and how many fully observed covariates z it takes.
// For the scaled-logistic family the scale is a fixed constant of the
// family, not a fitted parameter; only the inner affine coefficients are
// estimated.
struct MeanModelSpec {
  Family family = Family::Linear;
  bool include_intercept = true;
  int p = 0;           // number of fully observed covariates
  double scale = 1.0;  // ScaledLogistic only

  static MeanModelSpec linear(int p, bool include_intercept = true) {
    if (p < 0) throw ArgumentError("MeanModelSpec: p must be >= 0");
    MeanModelSpec s;
    s.family = Family::Linear;
    s.include_intercept = include_intercept;
    s.p = p;
    return s;
  }

  static MeanModelSpec scaled_logistic(int p, double scale,
                                       bool include_intercept = true) {
    if (p < 0) throw ArgumentError("MeanModelSpec: p must be >= 0");
    if (!(scale > 0.0))
      throw ArgumentError("MeanModelSpec: logistic scale must be > 0");
    MeanModelSpec s;
    s.family = Family::ScaledLogistic;
    s.include_intercept = include_intercept;
    s.p = p;
    s.scale = scale;
    return s;
  }

  // Parameter layout: [beta0 (if intercept), beta1 (x), beta2.. (z)].
  int n_params() const { return p + 1 + (include_intercept ? 1 : 0); }
};

// Model keys accepted in configs and on the command line.
inline MeanModelSpec spec_from_key(const std::string& key, int p) {
  if (key == "linear") return MeanModelSpec::linear(p, true);
  if (key == "linear_no_intercept") return MeanModelSpec::linear(p, false);
  if (key == "logistic5") return MeanModelSpec::scaled_logistic(p, 5.0, true);
  throw ArgumentError("unknown model key '" + key +
                      "' (expected linear, linear_no_intercept, logistic5)");
}

inline std::vector<std::string> param_names(const MeanModelSpec& spec) {
  std::vector<std::string> names;
  int k = spec.include_intercept ? 0 : 1;
  for (int i = 0; i < spec.n_params(); ++i)
    names.push_back("beta" + std::to_string(k + i));
  return names;
}

namespace detail {

inline void check_model_args(const MeanModelSpec& spec, const ParamVector& beta,
                             const Eigen::VectorXd& z) {
  if (static_cast<int>(z.size()) != spec.p)
    throw ArgumentError("mean model expects " + std::to_string(spec.p) +
                        " z covariates, got " + std::to_string(z.size()));
  if (static_cast<int>(beta.size()) != spec.n_params())
    throw ArgumentError("parameter vector has length " +
                        std::to_string(beta.size()) + ", expected " +
                        std::to_string(spec.n_params()));
  if (!beta.allFinite())
    throw ArgumentError("parameter vector has non-finite entries");
}

inline double linear_predictor(const MeanModelSpec& spec,
                               const ParamVector& beta, double x,
                               const Eigen::VectorXd& z) {
  int i = 0;
  double eta = 0.0;
  if (spec.include_intercept) eta += beta[i++];
  eta += beta[i++] * x;
  for (int j = 0; j < spec.p; ++j) eta += beta[i + j] * z[j];
  return eta;
}

}  // namespace detail

// Regressor row u = [1 (if intercept), x, z...]; the design row of the
// linear family and the carrier of both gradients.
inline Eigen::VectorXd regressor_row(const MeanModelSpec& spec, double x,
                                     const Eigen::VectorXd& z) {
  if (static_cast<int>(z.size()) != spec.p)
    throw ArgumentError("regressor_row: z has wrong length");
  Eigen::VectorXd u(spec.n_params());
  int i = 0;
  if (spec.include_intercept) u[i++] = 1.0;
  u[i++] = x;
  for (int j = 0; j < spec.p; ++j) u[i + j] = z[j];
  return u;
}

inline double mean_value(const MeanModelSpec& spec, const ParamVector& beta,
                         double x, const Eigen::VectorXd& z) {
  detail::check_model_args(spec, beta, z);
  double eta = detail::linear_predictor(spec, beta, x, z);
  if (spec.family == Family::Linear) return eta;
  return 1.0 / (1.0 + std::exp(-spec.scale * eta));
}

// Gradient of the mean in the parameters. Linear: the regressor row.
// Scaled logistic: scale * m * (1 - m) * u.
inline Eigen::VectorXd mean_gradient(const MeanModelSpec& spec,
                                     const ParamVector& beta, double x,
                                     const Eigen::VectorXd& z) {
  detail::check_model_args(spec, beta, z);
  Eigen::VectorXd u = regressor_row(spec, x, z);
  if (spec.family == Family::Linear) return u;
  double m = mean_value(spec, beta, x, z);
  return spec.scale * m * (1.0 - m) * u;
}

// Hessian of the mean in the parameters; zero for the linear family.
inline Eigen::MatrixXd mean_hessian(const MeanModelSpec& spec,
                                    const ParamVector& beta, double x,
                                    const Eigen::VectorXd& z) {
  detail::check_model_args(spec, beta, z);
  int k = spec.n_params();
  if (spec.family == Family::Linear) return Eigen::MatrixXd::Zero(k, k);
  Eigen::VectorXd u = regressor_row(spec, x, z);
  double m = mean_value(spec, beta, x, z);
  double s2 = spec.scale * spec.scale;
  return s2 * m * (1.0 - m) * (1.0 - 2.0 * m) * (u * u.transpose());
}

}  // namespace cccov
