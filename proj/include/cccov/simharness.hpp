#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "cccov/datagen.hpp"
#include "cccov/estimator.hpp"

namespace cccov {

enum class Method { CompleteCase, Oracle };

inline std::string method_to_string(Method m) {
  return m == Method::CompleteCase ? "CC" : "Oracle";
}

// Mean of (est_k - truth_k) / truth_k * 100 per coordinate.
inline Eigen::VectorXd percent_bias(const std::vector<ParamVector>& estimates,
                                    const ParamVector& truth) {
  if (estimates.empty())
    throw ArgumentError("percent_bias: no estimates");
  for (int k = 0; k < truth.size(); ++k)
    if (truth[k] == 0.0)
      throw ArgumentError("percent_bias: true beta" + std::to_string(k) +
                          " is zero; percent bias is undefined, report "
                          "absolute bias instead");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(truth.size());
  for (const auto& est : estimates) {
    if (est.size() != truth.size())
      throw ArgumentError("percent_bias: estimate length mismatch");
    out += (est - truth).cwiseQuotient(truth);
  }
  return out * (100.0 / static_cast<double>(estimates.size()));
}

// Fraction of intervals containing the true coordinate; endpoints closed.
inline Eigen::VectorXd coverage(const std::vector<Eigen::MatrixX2d>& cis,
                                const ParamVector& truth) {
  if (cis.empty()) throw ArgumentError("coverage: no intervals");
  Eigen::VectorXd hits = Eigen::VectorXd::Zero(truth.size());
  for (const auto& ci : cis) {
    if (ci.rows() != truth.size())
      throw ArgumentError("coverage: interval count mismatch");
    for (int k = 0; k < truth.size(); ++k)
      if (ci(k, 0) <= truth[k] && truth[k] <= ci(k, 1)) hits[k] += 1.0;
  }
  return hits / static_cast<double>(cis.size());
}

// Aggregates for one method within one setting. Failed replications
// (non-convergence, estimation errors, non-finite output) are excluded
// from every aggregate and only counted.
struct MethodSummary {
  Eigen::VectorXd percent_bias;
  Eigen::VectorXd mean_se;
  Eigen::VectorXd coverage;
  Eigen::VectorXd empirical_sd;  // sample sd of the estimates
  int n_failed = 0;
  int n_converged = 0;
};

struct SimSummary {
  SimSetting setting;
  int reps = 0;
  std::map<Method, MethodSummary> by_method;
};

namespace detail {

struct RepRecord {
  bool ok = false;
  ParamVector beta;
  Eigen::VectorXd se;
  Eigen::MatrixX2d ci;
};

}  // namespace detail

// Runs `reps` independent replications of a setting, fitting the requested
// methods on each, and aggregates percent bias, mean estimated SE, Wald
// coverage and the empirical sd of the estimates. Replication j draws from
// seed (master, j), so results are reproducible and independent of worker
// count; aggregation folds in replication-index order.
inline SimSummary run_replications(const SimSetting& setting, int reps,
                                   const std::set<Method>& methods,
                                   int workers = 1,
                                   const SolverOptions& opts = {}) {
  setting.validate();
  if (reps < 1) throw ArgumentError("run_replications: reps must be >= 1");
  if (methods.empty()) throw ArgumentError("run_replications: no methods");
  if (workers < 1) throw ArgumentError("run_replications: workers must be >= 1");
  if (workers > 1 && opts.rss_trace)
    throw ArgumentError("run_replications: rss_trace requires workers = 1");

  std::map<Method, std::vector<detail::RepRecord>> records;
  for (Method m : methods) records[m].resize(reps);
  std::vector<std::pair<Method, std::vector<detail::RepRecord>*>> slots;
  for (auto& [m, recs] : records) slots.emplace_back(m, &recs);

  std::atomic<int> next{0};
  auto work = [&]() {
    for (;;) {
      int j = next.fetch_add(1);
      if (j >= reps) return;
      SimSetting rep_setting = setting;
      rep_setting.seed = replication_seed(setting.seed, static_cast<std::uint64_t>(j));
      Dataset data = generate(rep_setting);
      for (auto& [m, recs] : slots) {
        detail::RepRecord& rec = (*recs)[j];
        try {
          FitResult fit = m == Method::CompleteCase
                              ? fit_complete_case(data, setting.model, opts)
                              : fit_oracle(data, setting.model, opts);
          if (fit.converged && fit.beta_hat.allFinite() && fit.se.allFinite()) {
            rec.ok = true;
            rec.beta = fit.beta_hat;
            rec.se = fit.se;
            rec.ci = fit.ci;
          }
        } catch (const Error&) {
          rec.ok = false;
        }
      }
    }
  };

  int n_threads = std::min(workers, reps);
  if (n_threads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  SimSummary summary;
  summary.setting = setting;
  summary.reps = reps;
  const int k = setting.model.n_params();
  for (Method m : methods) {
    std::vector<ParamVector> betas;
    std::vector<Eigen::MatrixX2d> cis;
    Eigen::VectorXd se_sum = Eigen::VectorXd::Zero(k);
    for (int j = 0; j < reps; ++j) {
      const detail::RepRecord& rec = records[m][j];
      if (!rec.ok) continue;
      betas.push_back(rec.beta);
      cis.push_back(rec.ci);
      se_sum += rec.se;
    }
    if (betas.empty())
      throw SummaryError("all " + std::to_string(reps) +
                         " replications failed for method " + method_to_string(m));
    MethodSummary ms;
    ms.n_converged = static_cast<int>(betas.size());
    ms.n_failed = reps - ms.n_converged;
    ms.percent_bias = percent_bias(betas, setting.beta_true);
    ms.coverage = coverage(cis, setting.beta_true);
    ms.mean_se = se_sum / static_cast<double>(betas.size());
    Eigen::VectorXd mean_beta = Eigen::VectorXd::Zero(k);
    for (const auto& b : betas) mean_beta += b;
    mean_beta /= static_cast<double>(betas.size());
    Eigen::VectorXd ss = Eigen::VectorXd::Zero(k);
    for (const auto& b : betas) ss += (b - mean_beta).cwiseAbs2();
    ms.empirical_sd = betas.size() > 1
                          ? (ss / (static_cast<double>(betas.size()) - 1.0))
                                .cwiseSqrt()
                                .eval()
                          : Eigen::VectorXd::Constant(
                                k, std::numeric_limits<double>::quiet_NaN());
    summary.by_method[m] = std::move(ms);
  }
  return summary;
}

enum class TableFormat { Csv, Markdown };

namespace detail {

inline std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

inline std::vector<const SimSummary*> sorted_summaries(
    const std::vector<SimSummary>& summaries) {
  std::vector<const SimSummary*> order;
  order.reserve(summaries.size());
  for (const auto& s : summaries) order.push_back(&s);
  std::stable_sort(order.begin(), order.end(),
                   [](const SimSummary* a, const SimSummary* b) {
                     if (a->setting.mechanism != b->setting.mechanism)
                       return static_cast<int>(a->setting.mechanism) <
                              static_cast<int>(b->setting.mechanism);
                     if (a->setting.n != b->setting.n)
                       return a->setting.n < b->setting.n;
                     return a->setting.rate < b->setting.rate;
                   });
  return order;
}

}  // namespace detail

// Renders summaries as a flat CSV (one row per mechanism/rate/method) or as
// markdown tables grouped by mechanism. Ordering and rounding (two
// decimals) are fixed, so identical inputs yield byte-identical text.
inline std::string emit_table(const std::vector<SimSummary>& summaries,
                              TableFormat format) {
  std::string out;
  auto names = summaries.empty() ? std::vector<std::string>{}
                                 : param_names(summaries.front().setting.model);
  auto order = detail::sorted_summaries(summaries);

  if (format == TableFormat::Csv) {
    out += "mechanism,n,rate,method,reps,n_failed";
    for (const auto& nm : names) out += ",pct_bias_" + nm;
    for (const auto& nm : names) out += ",se_" + nm;
    for (const auto& nm : names) out += ",coverage_" + nm;
    out += "\n";
    for (const SimSummary* s : order) {
      for (const auto& [method, ms] : s->by_method) {
        out += mechanism_to_string(s->setting.mechanism);
        out += "," + std::to_string(s->setting.n);
        out += "," + detail::fmt2(s->setting.rate);
        out += "," + method_to_string(method);
        out += "," + std::to_string(s->reps);
        out += "," + std::to_string(ms.n_failed);
        for (int j = 0; j < ms.percent_bias.size(); ++j)
          out += "," + detail::fmt2(ms.percent_bias[j]);
        for (int j = 0; j < ms.mean_se.size(); ++j)
          out += "," + detail::fmt2(ms.mean_se[j]);
        for (int j = 0; j < ms.coverage.size(); ++j)
          out += "," + detail::fmt2(ms.coverage[j]);
        out += "\n";
      }
    }
    return out;
  }

  // Markdown: one table per mechanism, CC row above Oracle row per rate.
  std::string header = "| rate | method | reps | failed |";
  std::string rule = "|---|---|---|---|";
  for (const auto& nm : names) { header += " bias% " + nm + " |"; rule += "---|"; }
  for (const auto& nm : names) { header += " se " + nm + " |"; rule += "---|"; }
  for (const auto& nm : names) { header += " cov " + nm + " |"; rule += "---|"; }

  if (order.empty()) return header + "\n" + rule + "\n";

  std::pair<Mechanism, int> current{};
  bool first = true;
  for (const SimSummary* s : order) {
    std::pair<Mechanism, int> group{s->setting.mechanism, s->setting.n};
    if (first || group != current) {
      if (!first) out += "\n";
      out += "## " + mechanism_to_string(s->setting.mechanism) + " (n = " +
             std::to_string(s->setting.n) + ")\n\n";
      out += header + "\n" + rule + "\n";
      current = group;
      first = false;
    }
    for (const auto& [method, ms] : s->by_method) {
      out += "| " + detail::fmt2(s->setting.rate) + " | " +
             method_to_string(method) + " | " + std::to_string(s->reps) +
             " | " + std::to_string(ms.n_failed) + " |";
      for (int j = 0; j < ms.percent_bias.size(); ++j)
        out += " " + detail::fmt2(ms.percent_bias[j]) + " |";
      for (int j = 0; j < ms.mean_se.size(); ++j)
        out += " " + detail::fmt2(ms.mean_se[j]) + " |";
      for (int j = 0; j < ms.coverage.size(); ++j)
        out += " " + detail::fmt2(ms.coverage[j]) + " |";
      out += "\n";
    }
  }
  return out;
}

}  // namespace cccov
