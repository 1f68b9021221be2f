#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "cccov/dataset.hpp"
#include "cccov/model.hpp"
#include "cccov/rng.hpp"

namespace cccov {

// The six built-in censoring regimes. Each one realizes a different
// combination of the censoring-mechanism assumptions; the tag names say
// which assumption is the first to fail (or that none do).
enum class Mechanism {
  ExogenousFails,
  StrictExogenousFails,
  CondXZFails,
  CondZFails,
  IndependenceFails,
  IndependenceHolds,
};

inline const std::array<Mechanism, 6>& all_mechanisms() {
  static const std::array<Mechanism, 6> all = {
      Mechanism::ExogenousFails,    Mechanism::StrictExogenousFails,
      Mechanism::CondXZFails,       Mechanism::CondZFails,
      Mechanism::IndependenceFails, Mechanism::IndependenceHolds,
  };
  return all;
}

inline std::string mechanism_to_string(Mechanism m) {
  switch (m) {
    case Mechanism::ExogenousFails: return "ExogenousFails";
    case Mechanism::StrictExogenousFails: return "StrictExogenousFails";
    case Mechanism::CondXZFails: return "CondXZFails";
    case Mechanism::CondZFails: return "CondZFails";
    case Mechanism::IndependenceFails: return "IndependenceFails";
    case Mechanism::IndependenceHolds: return "IndependenceHolds";
  }
  throw ArgumentError("invalid mechanism");
}

inline Mechanism mechanism_from_string(const std::string& s) {
  for (Mechanism m : all_mechanisms())
    if (mechanism_to_string(m) == s) return m;
  throw ArgumentError("unknown mechanism '" + s + "'");
}

// One generation regime: mechanism, sample size, target censoring rate,
// mean model with its true parameters, error variance, seed.
struct SimSetting {
  Mechanism mechanism = Mechanism::IndependenceHolds;
  int n = 0;
  double rate = 0.0;  // censoring rate in (0, 1)
  MeanModelSpec model;
  ParamVector beta_true;
  double sigma2 = 0.0;
  std::uint64_t seed = 0;
  // CondXZFails only: classify c against empirical quartiles of the drawn
  // sample instead of the theoretical quartiles of its uniform law.
  bool empirical_iqr = false;

  void validate() const {
    if (n < 1) throw ArgumentError("SimSetting: n must be >= 1");
    if (!(rate > 0.0) || !(rate < 1.0))
      throw ArgumentError("SimSetting: censoring rate must be in (0, 1)");
    if (!(sigma2 > 0.0)) throw ArgumentError("SimSetting: sigma2 must be > 0");
    if (static_cast<int>(beta_true.size()) != model.n_params())
      throw ArgumentError("SimSetting: beta_true does not match the model");
    if (model.p != 1)
      throw ArgumentError("SimSetting: built-in generators use exactly one z covariate");
  }
};

// Simulation truths used by the built-in scenarios.
inline ParamVector default_beta_true(const std::string& model_key) {
  if (model_key == "linear") return Eigen::Vector3d(0.5, 1.0, -2.0);
  if (model_key == "linear_no_intercept") return Eigen::Vector2d(1.0, -2.0);
  if (model_key == "logistic5") return Eigen::Vector3d(0.005, 0.01, -0.02);
  throw ArgumentError("unknown model key '" + model_key + "'");
}

inline double default_error_variance(const std::string& model_key) {
  if (model_key == "linear" || model_key == "linear_no_intercept") return 2.0;
  if (model_key == "logistic5") return 0.08;
  throw ArgumentError("unknown model key '" + model_key + "'");
}

namespace detail {

inline double sample_median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  if (n % 2 == 1) return v[n / 2];
  return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Linear-interpolation sample quantile (R type 7).
inline double sample_quantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  double h = (static_cast<double>(v.size()) - 1.0) * p;
  std::size_t lo = static_cast<std::size_t>(std::floor(h));
  std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace detail

// Draws one sample under the given regime. x ~ Uniform(0, 3) and
// z ~ Normal(0, 1) always; c, delta and eps follow the mechanism. Each
// variable consumes its own named random stream, so x, z and the standard
// normal core of eps are identical across mechanisms and rates for a fixed
// seed.
inline Dataset generate(const SimSetting& s) {
  s.validate();
  const int n = s.n;
  const double r = s.rate;
  const double sigma = std::sqrt(s.sigma2);
  const double nan = std::numeric_limits<double>::quiet_NaN();

  std::uniform_real_distribution<double> unif01(0.0, 1.0);
  std::normal_distribution<double> stdnorm(0.0, 1.0);

  Eigen::VectorXd x(n), z(n), eta(n);
  {
    auto g = named_stream(s.seed, "x");
    for (int i = 0; i < n; ++i) x[i] = 3.0 * unif01(g);
  }
  {
    auto g = named_stream(s.seed, "z");
    for (int i = 0; i < n; ++i) z[i] = stdnorm(g);
  }
  {
    auto g = named_stream(s.seed, "eps");
    for (int i = 0; i < n; ++i) eta[i] = stdnorm(g);
  }

  Eigen::VectorXd eps(n), w(n);
  Eigen::VectorXi delta(n);
  std::optional<Eigen::VectorXd> c;

  switch (s.mechanism) {
    case Mechanism::ExogenousFails: {
      // delta ~ Bernoulli(1 - r); eps | delta ~ Normal(mu, sigma^2) with
      // mu = (sigma/8)(1 - delta) - (sigma/8) r/(1-r) delta. c unspecified.
      auto g = named_stream(s.seed, "delta");
      for (int i = 0; i < n; ++i) delta[i] = unif01(g) < (1.0 - r) ? 1 : 0;
      for (int i = 0; i < n; ++i) {
        double mu = delta[i] == 1 ? -(sigma / 8.0) * r / (1.0 - r) : sigma / 8.0;
        eps[i] = mu + sigma * eta[i];
      }
      break;
    }
    case Mechanism::StrictExogenousFails: {
      // eps ~ Normal(0, sigma^2); delta = 1 iff |eps| is at or above the
      // empirical r-quantile of |eps| (order statistic at index ceil(r n),
      // zero based), so exactly ceil(r n) rows are censored.
      eps = sigma * eta;
      std::vector<double> abs_eps(n);
      for (int i = 0; i < n; ++i) abs_eps[i] = std::abs(eps[i]);
      std::vector<double> sorted = abs_eps;
      std::sort(sorted.begin(), sorted.end());
      std::size_t idx = static_cast<std::size_t>(std::ceil(r * n));
      idx = std::min(idx, static_cast<std::size_t>(n - 1));
      double threshold = sorted[idx];
      for (int i = 0; i < n; ++i) delta[i] = abs_eps[i] >= threshold ? 1 : 0;
      break;
    }
    case Mechanism::CondXZFails:
    case Mechanism::IndependenceHolds: {
      // c ~ Uniform(0, 6 - 6r) for r >= 0.5, else Uniform(0, 3/(2r)).
      double b = r >= 0.5 ? 6.0 - 6.0 * r : 3.0 / (2.0 * r);
      Eigen::VectorXd cv(n);
      auto g = named_stream(s.seed, "c");
      for (int i = 0; i < n; ++i) cv[i] = b * unif01(g);
      if (s.mechanism == Mechanism::CondXZFails) {
        // eps variance depends on where c falls relative to the quartiles
        // of its own law: Normal(0, 0.5 sigma^2) inside, 1.5 sigma^2 outside.
        double lo = b / 4.0, hi = 3.0 * b / 4.0;
        if (s.empirical_iqr) {
          std::vector<double> cs(cv.data(), cv.data() + n);
          lo = detail::sample_quantile(cs, 0.25);
          hi = detail::sample_quantile(cs, 0.75);
        }
        for (int i = 0; i < n; ++i) {
          double sd = (cv[i] >= lo && cv[i] <= hi) ? sigma * std::sqrt(0.5)
                                                   : sigma * std::sqrt(1.5);
          eps[i] = sd * eta[i];
        }
      } else {
        eps = sigma * eta;
      }
      c = cv;
      break;
    }
    case Mechanism::CondZFails: {
      // c_i ~ Uniform(0, x_i / r): censoring depends on x directly.
      Eigen::VectorXd cv(n);
      auto g = named_stream(s.seed, "c");
      for (int i = 0; i < n; ++i) cv[i] = (x[i] / r) * unif01(g);
      eps = sigma * eta;
      c = cv;
      break;
    }
    case Mechanism::IndependenceFails: {
      // c depends on which side of the sample median of z the row falls.
      double med = detail::sample_median({z.data(), z.data() + n});
      Eigen::VectorXd cv(n);
      auto g = named_stream(s.seed, "c");
      for (int i = 0; i < n; ++i) {
        double lo, hi;
        if (r >= 0.5) {
          if (z[i] > med) { lo = 0.0; hi = 6.0 - 6.0 * r; }
          else { lo = (3.0 - 6.0 * r) / (2.0 - 2.0 * r); hi = 3.0; }
        } else {
          if (z[i] > med) { lo = 0.0; hi = 3.0 / (2.0 * r); }
          else { lo = 3.0 - 6.0 * r; hi = 3.0; }
        }
        cv[i] = lo + (hi - lo) * unif01(g);
      }
      eps = sigma * eta;
      c = cv;
      break;
    }
  }

  if (c) {
    for (int i = 0; i < n; ++i) {
      delta[i] = x[i] <= (*c)[i] ? 1 : 0;
      w[i] = std::min(x[i], (*c)[i]);
    }
  } else {
    for (int i = 0; i < n; ++i) w[i] = delta[i] == 1 ? x[i] : nan;
  }

  Eigen::VectorXd y(n);
  Eigen::VectorXd zi(1);
  for (int i = 0; i < n; ++i) {
    zi[0] = z[i];
    y[i] = mean_value(s.model, s.beta_true, x[i], zi) + eps[i];
  }

  Dataset d;
  d.y = y;
  d.w = w;
  d.delta = delta;
  d.z = z;
  d.x_true = x;
  d.c = c;
  d.eps = eps;
  return d;
}

// Empirical probes of the censoring mechanism: censoring rate, eps moments
// by censoring cell, and the correlation of eps with c. NaN marks a probe
// that is unavailable (empty cell, or no c column).
struct MechanismDiagnostics {
  double censoring_rate;
  double mean_eps_observed;  // mean(eps | delta = 1)
  double mean_eps_censored;  // mean(eps | delta = 0)
  double sd_eps_observed;
  double sd_eps_censored;
  double corr_eps_c;
};

inline MechanismDiagnostics mechanism_diagnostics(const Dataset& d) {
  if (!d.eps) throw ArgumentError("mechanism_diagnostics requires eps");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const Eigen::VectorXd& eps = *d.eps;
  const int n = d.n();

  auto cell_stats = [&](int which, double& mean_out, double& sd_out) {
    double sum = 0.0;
    int cnt = 0;
    for (int i = 0; i < n; ++i)
      if (d.delta[i] == which) { sum += eps[i]; ++cnt; }
    if (cnt == 0) { mean_out = nan; sd_out = nan; return; }
    mean_out = sum / cnt;
    if (cnt < 2) { sd_out = nan; return; }
    double ss = 0.0;
    for (int i = 0; i < n; ++i)
      if (d.delta[i] == which) { double e = eps[i] - mean_out; ss += e * e; }
    sd_out = std::sqrt(ss / (cnt - 1));
  };

  MechanismDiagnostics out{};
  int censored = 0;
  for (int i = 0; i < n; ++i) censored += d.delta[i] == 0 ? 1 : 0;
  out.censoring_rate = static_cast<double>(censored) / n;
  cell_stats(1, out.mean_eps_observed, out.sd_eps_observed);
  cell_stats(0, out.mean_eps_censored, out.sd_eps_censored);

  out.corr_eps_c = nan;
  if (d.c) {
    const Eigen::VectorXd& c = *d.c;
    double me = eps.mean(), mc = c.mean();
    double see = 0.0, scc = 0.0, sec = 0.0;
    for (int i = 0; i < n; ++i) {
      see += (eps[i] - me) * (eps[i] - me);
      scc += (c[i] - mc) * (c[i] - mc);
      sec += (eps[i] - me) * (c[i] - mc);
    }
    if (see > 0.0 && scc > 0.0) out.corr_eps_c = sec / std::sqrt(see * scc);
  }
  return out;
}

}  // namespace cccov
