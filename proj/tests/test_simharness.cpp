#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "cccov/simharness.hpp"

using namespace cccov;

namespace {

SimSetting linear_setting(Mechanism mech, int n, double rate,
                          std::uint64_t seed) {
  SimSetting s;
  s.mechanism = mech;
  s.n = n;
  s.rate = rate;
  s.model = MeanModelSpec::linear(1);
  s.beta_true = Eigen::Vector3d(0.5, 1.0, -2.0);
  s.sigma2 = 2.0;
  s.seed = seed;
  return s;
}

const std::set<Method> kBoth = {Method::CompleteCase, Method::Oracle};

}  // namespace

TEST(PercentBias, Examples) {
  Eigen::VectorXd truth(1);
  truth << 0.5;
  std::vector<ParamVector> all_truth(5, truth);
  EXPECT_DOUBLE_EQ(percent_bias(all_truth, truth)[0], 0.0);

  Eigen::VectorXd lo(1), hi(1);
  lo << 0.4;
  hi << 0.6;
  EXPECT_NEAR(percent_bias({lo, hi}, truth)[0], 0.0, 1e-12);

  Eigen::VectorXd single(1);
  single << 0.445;
  EXPECT_NEAR(percent_bias({single}, truth)[0], -11.0, 1e-9);
}

TEST(PercentBias, ZeroTruthInstructsAbsoluteBias) {
  Eigen::VectorXd truth(2);
  truth << 1.0, 0.0;
  std::vector<ParamVector> est = {truth};
  try {
    percent_bias(est, truth);
    FAIL() << "expected ArgumentError";
  } catch (const ArgumentError& e) {
    EXPECT_NE(std::string(e.what()).find("absolute bias"), std::string::npos);
  }
  EXPECT_THROW(percent_bias({}, truth), ArgumentError);
}

TEST(Coverage, Examples) {
  Eigen::VectorXd truth(2);
  truth << 1.0, -2.0;
  Eigen::MatrixX2d huge(2, 2), miss(2, 2), point(2, 2);
  huge << -1e12, 1e12, -1e12, 1e12;
  miss << 5.0, 6.0, 5.0, 6.0;
  point << 1.0, 1.0, -2.0, -2.0;  // closed endpoints count
  EXPECT_DOUBLE_EQ(coverage({huge, huge}, truth)[0], 1.0);
  EXPECT_DOUBLE_EQ(coverage({miss}, truth)[0], 0.0);
  EXPECT_DOUBLE_EQ(coverage({miss}, truth)[1], 0.0);
  EXPECT_DOUBLE_EQ(coverage({point}, truth)[0], 1.0);
  EXPECT_DOUBLE_EQ(coverage({point}, truth)[1], 1.0);
}

TEST(RunReplications, OracleRowsIdenticalAcrossMechanismsBThroughF) {
  // Mechanisms whose errors are Normal(0, sigma^2) share the (x, z, eps)
  // streams, so the oracle aggregates coincide bit for bit across both
  // mechanism and censoring rate.
  const int reps = 50;
  std::vector<MethodSummary> oracle_rows;
  for (Mechanism mech : {Mechanism::StrictExogenousFails, Mechanism::CondZFails,
                         Mechanism::IndependenceFails,
                         Mechanism::IndependenceHolds}) {
    for (double rate : {0.25, 0.75}) {
      SimSummary s = run_replications(linear_setting(mech, 300, rate, 2024),
                                      reps, kBoth, 2);
      oracle_rows.push_back(s.by_method.at(Method::Oracle));
    }
  }
  const MethodSummary& first = oracle_rows.front();
  for (const MethodSummary& row : oracle_rows) {
    EXPECT_EQ(std::memcmp(row.percent_bias.data(), first.percent_bias.data(),
                          sizeof(double) * 3),
              0);
    EXPECT_EQ(std::memcmp(row.mean_se.data(), first.mean_se.data(),
                          sizeof(double) * 3),
              0);
    EXPECT_EQ(std::memcmp(row.coverage.data(), first.coverage.data(),
                          sizeof(double) * 3),
              0);
    EXPECT_EQ(row.n_failed, 0);
  }
}

TEST(RunReplications, WorkerCountDoesNotChangeResults) {
  SimSetting setting = linear_setting(Mechanism::CondXZFails, 200, 0.4, 11);
  SimSummary a = run_replications(setting, 40, kBoth, 1);
  SimSummary b = run_replications(setting, 40, kBoth, 4);
  std::vector<SimSummary> va{a}, vb{b};
  EXPECT_EQ(emit_table(va, TableFormat::Csv), emit_table(vb, TableFormat::Csv));
  EXPECT_EQ(std::memcmp(a.by_method.at(Method::CompleteCase).percent_bias.data(),
                        b.by_method.at(Method::CompleteCase).percent_bias.data(),
                        sizeof(double) * 3),
            0);
}

TEST(RunReplications, NearZeroCensoringMakesCcMatchOracle) {
  SimSetting setting = linear_setting(Mechanism::IndependenceHolds, 400, 0.01, 5);
  SimSummary s = run_replications(setting, 200, kBoth, 2);
  const MethodSummary& cc = s.by_method.at(Method::CompleteCase);
  const MethodSummary& oracle = s.by_method.at(Method::Oracle);
  for (int k = 0; k < 3; ++k) {
    EXPECT_NEAR(cc.percent_bias[k], oracle.percent_bias[k], 1.0);
    EXPECT_NEAR(cc.mean_se[k], oracle.mean_se[k], 0.02);
    EXPECT_NEAR(cc.coverage[k], oracle.coverage[k], 0.03);
  }
}

TEST(RunReplications, CoverageNearNominalUnderIndependence) {
  // Independence holds, n = 400, r = 0.25, 1000 replications: coverage of
  // the three parameters lands near (0.94, 0.95, 0.93).
  SimSetting setting = linear_setting(Mechanism::IndependenceHolds, 400, 0.25, 1);
  SimSummary s = run_replications(setting, 1000, kBoth, 4);
  const MethodSummary& cc = s.by_method.at(Method::CompleteCase);
  EXPECT_NEAR(cc.coverage[0], 0.94, 0.02);
  EXPECT_NEAR(cc.coverage[1], 0.95, 0.02);
  EXPECT_NEAR(cc.coverage[2], 0.93, 0.02);
}

TEST(RunReplications, MeanSeUnderIndependenceAtHighCensoring) {
  // Independence holds, n = 400, r = 0.75: the complete-case mean estimated
  // SE of the x coefficient lands near 0.39.
  SimSetting setting = linear_setting(Mechanism::IndependenceHolds, 400, 0.75, 1);
  SimSummary s = run_replications(setting, 1000, kBoth, 4);
  EXPECT_NEAR(s.by_method.at(Method::CompleteCase).mean_se[1], 0.39, 0.05);
}

TEST(RunReplications, OracleIsUnbiasedUnderBrokenExogeneity) {
  // Exogenous censoring fails, n = 1200, r = 0.75: the oracle percent bias
  // of the intercept stays within +-3 of 0.47.
  SimSetting setting = linear_setting(Mechanism::ExogenousFails, 1200, 0.75, 1);
  SimSummary s = run_replications(setting, 1000, {Method::Oracle}, 4);
  EXPECT_NEAR(s.by_method.at(Method::Oracle).percent_bias[0], 0.47, 3.0);
}

TEST(RunReplications, AllFailedNamesTheMethod) {
  // Two rows can never identify three parameters, so every replication
  // fails for every method.
  SimSetting setting = linear_setting(Mechanism::IndependenceHolds, 2, 0.5, 3);
  try {
    run_replications(setting, 3, {Method::CompleteCase}, 1);
    FAIL() << "expected SummaryError";
  } catch (const SummaryError& e) {
    EXPECT_NE(std::string(e.what()).find("CC"), std::string::npos);
  }
}

TEST(RunReplications, ArgumentValidation) {
  SimSetting setting = linear_setting(Mechanism::IndependenceHolds, 50, 0.5, 3);
  EXPECT_THROW(run_replications(setting, 0, kBoth, 1), ArgumentError);
  EXPECT_THROW(run_replications(setting, 5, {}, 1), ArgumentError);
  EXPECT_THROW(run_replications(setting, 5, kBoth, 0), ArgumentError);
}

TEST(EmitTable, EmptyListIsHeaderOnly) {
  std::string csv = emit_table({}, TableFormat::Csv);
  EXPECT_EQ(csv, "mechanism,n,rate,method,reps,n_failed\n");
  std::string md = emit_table({}, TableFormat::Markdown);
  EXPECT_EQ(std::count(md.begin(), md.end(), '\n'), 2);
}

TEST(EmitTable, OneSummaryMakesOneCcAndOneOracleRow) {
  SimSetting setting = linear_setting(Mechanism::CondZFails, 100, 0.25, 17);
  SimSummary s = run_replications(setting, 10, kBoth, 1);
  std::string csv = emit_table({s}, TableFormat::Csv);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);  // header + 2 rows
  EXPECT_NE(csv.find("CondZFails,100,0.25,CC,10,"), std::string::npos);
  EXPECT_NE(csv.find("CondZFails,100,0.25,Oracle,10,"), std::string::npos);

  std::string md = emit_table({s}, TableFormat::Markdown);
  EXPECT_NE(md.find("## CondZFails"), std::string::npos);
  EXPECT_NE(md.find("| CC |"), std::string::npos);
  EXPECT_NE(md.find("| Oracle |"), std::string::npos);
}

TEST(EmitTable, DeterministicAndOrderIndependent) {
  SimSetting a = linear_setting(Mechanism::IndependenceHolds, 80, 0.25, 21);
  SimSetting b = linear_setting(Mechanism::ExogenousFails, 80, 0.75, 21);
  SimSummary sa = run_replications(a, 8, kBoth, 1);
  SimSummary sb = run_replications(b, 8, kBoth, 2);
  std::string t1 = emit_table({sa, sb}, TableFormat::Csv);
  std::string t2 = emit_table({sb, sa}, TableFormat::Csv);
  EXPECT_EQ(t1, t2);  // sorted by (mechanism, rate, method)
  // Mechanism order follows the regime list, rates ascend within it.
  EXPECT_LT(t1.find("ExogenousFails"), t1.find("IndependenceHolds"));
}
