#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cccov/model.hpp"

using namespace cccov;

namespace {

Eigen::VectorXd vec1(double v) {
  Eigen::VectorXd z(1);
  z[0] = v;
  return z;
}

// Central finite differences of mean_value in beta; the reference that
// mean_gradient must reproduce.
Eigen::VectorXd fd_gradient(const MeanModelSpec& spec, const ParamVector& beta,
                            double x, const Eigen::VectorXd& z) {
  Eigen::VectorXd g(beta.size());
  for (int k = 0; k < beta.size(); ++k) {
    double h = 1e-6 * std::max(1.0, std::abs(beta[k]));
    ParamVector up = beta, dn = beta;
    up[k] += h;
    dn[k] -= h;
    g[k] = (mean_value(spec, up, x, z) - mean_value(spec, dn, x, z)) / (2.0 * h);
  }
  return g;
}

}  // namespace

TEST(MeanValue, LinearExamples) {
  auto spec = MeanModelSpec::linear(1);
  Eigen::Vector3d beta(0.5, 1.0, -2.0);
  EXPECT_DOUBLE_EQ(mean_value(spec, beta, 0.0, vec1(0.0)), 0.5);
  EXPECT_DOUBLE_EQ(mean_value(spec, beta, 1.0, vec1(1.0)), -0.5);
}

TEST(MeanValue, LogisticAtZeroIsHalf) {
  auto spec = MeanModelSpec::scaled_logistic(1, 5.0);
  Eigen::Vector3d beta(0.0, 0.0, 0.0);
  EXPECT_DOUBLE_EQ(mean_value(spec, beta, 3.7, vec1(-1.2)), 0.5);
  EXPECT_DOUBLE_EQ(mean_value(spec, beta, -20.0, vec1(4.0)), 0.5);
}

TEST(MeanValue, NoInterceptDropsLeadingTerm) {
  auto spec = MeanModelSpec::linear(1, false);
  Eigen::Vector2d beta(1.0, -2.0);
  EXPECT_DOUBLE_EQ(mean_value(spec, beta, 1.0, vec1(1.0)), -1.0);
}

TEST(MeanGradient, LinearIsRegressorRow) {
  auto spec = MeanModelSpec::linear(1);
  Eigen::Vector3d beta(0.1, 0.2, 0.3);
  Eigen::VectorXd g = mean_gradient(spec, beta, 2.0, vec1(3.0));
  EXPECT_DOUBLE_EQ(g[0], 1.0);
  EXPECT_DOUBLE_EQ(g[1], 2.0);
  EXPECT_DOUBLE_EQ(g[2], 3.0);
}

TEST(MeanGradient, LogisticAtZeroIsQuarterScaleRow) {
  auto spec = MeanModelSpec::scaled_logistic(1, 5.0);
  Eigen::Vector3d beta(0.0, 0.0, 0.0);
  Eigen::VectorXd g = mean_gradient(spec, beta, 2.0, vec1(3.0));
  EXPECT_NEAR(g[0], 1.25, 1e-12);
  EXPECT_NEAR(g[1], 2.5, 1e-12);
  EXPECT_NEAR(g[2], 3.75, 1e-12);
}

TEST(MeanGradient, LogisticMatchesFiniteDifferences) {
  auto spec = MeanModelSpec::scaled_logistic(1, 5.0);
  Eigen::Vector3d beta(0.005, 0.01, -0.02);
  Eigen::VectorXd g = mean_gradient(spec, beta, 1.5, vec1(0.7));
  Eigen::VectorXd fd = fd_gradient(spec, beta, 1.5, vec1(0.7));
  for (int k = 0; k < 3; ++k)
    EXPECT_NEAR(g[k], fd[k], 1e-6 * std::abs(fd[k]));
}

TEST(MeanGradient, FiniteDifferencePropertyAcrossFamilies) {
  std::mt19937 gen(20240811);
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  std::uniform_int_distribution<int> pick_p(0, 3);
  for (int trial = 0; trial < 200; ++trial) {
    int p = pick_p(gen);
    bool intercept = trial % 2 == 0;
    MeanModelSpec spec =
        trial % 3 == 0 ? MeanModelSpec::linear(p, intercept)
                       : MeanModelSpec::scaled_logistic(p, trial % 3 == 1 ? 5.0 : 2.0,
                                                        intercept);
    ParamVector beta(spec.n_params());
    for (int k = 0; k < beta.size(); ++k) beta[k] = unif(gen);
    Eigen::VectorXd z(p);
    for (int j = 0; j < p; ++j) z[j] = unif(gen);
    double x = 1.5 * unif(gen);

    Eigen::VectorXd g = mean_gradient(spec, beta, x, z);
    Eigen::VectorXd fd = fd_gradient(spec, beta, x, z);
    for (int k = 0; k < beta.size(); ++k) {
      double tol = 1e-5 * std::max(1e-3, std::abs(fd[k]));
      EXPECT_NEAR(g[k], fd[k], tol) << "trial " << trial << " coord " << k;
    }
  }
}

TEST(MeanHessian, LogisticMatchesFiniteDifferencesOfGradient) {
  auto spec = MeanModelSpec::scaled_logistic(1, 5.0);
  Eigen::Vector3d beta(0.05, 0.2, -0.1);
  Eigen::VectorXd z = vec1(0.7);
  Eigen::MatrixXd h = mean_hessian(spec, beta, 1.5, z);
  for (int k = 0; k < 3; ++k) {
    double step = 1e-6;
    ParamVector up = beta, dn = beta;
    up[k] += step;
    dn[k] -= step;
    Eigen::VectorXd col = (mean_gradient(spec, up, 1.5, z) -
                           mean_gradient(spec, dn, 1.5, z)) /
                          (2.0 * step);
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(h(j, k), col[j], 1e-5);
  }
  EXPECT_TRUE(mean_hessian(MeanModelSpec::linear(1), Eigen::Vector3d(1, 2, 3),
                           0.5, vec1(0.1))
                  .isZero());
}

TEST(MeanValue, LogisticBoundedAndMonotone) {
  auto spec = MeanModelSpec::scaled_logistic(1, 5.0);
  std::mt19937 gen(7);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::Vector3d beta(unif(gen), std::abs(unif(gen)) + 0.05, unif(gen));
    Eigen::VectorXd z = vec1(unif(gen));
    double prev = -1.0;
    for (double x = -5.0; x <= 5.0; x += 0.5) {
      double m = mean_value(spec, beta, x, z);
      EXPECT_GT(m, 0.0);
      EXPECT_LT(m, 1.0);
      EXPECT_GT(m, prev);  // strictly increasing in beta1 * x, beta1 > 0
      prev = m;
    }
  }
}

TEST(MeanModelSpec, DimensionErrors) {
  auto spec = MeanModelSpec::linear(1);
  Eigen::Vector3d beta(0.5, 1.0, -2.0);
  Eigen::VectorXd z2(2);
  z2 << 1.0, 2.0;
  EXPECT_THROW(mean_value(spec, beta, 0.0, z2), ArgumentError);
  EXPECT_THROW(mean_value(spec, Eigen::Vector2d(1.0, 2.0), 0.0, vec1(0.0)),
               ArgumentError);
  EXPECT_THROW(mean_gradient(spec, beta, 0.0, z2), ArgumentError);
  EXPECT_THROW(MeanModelSpec::scaled_logistic(1, 0.0), ArgumentError);
  EXPECT_THROW(MeanModelSpec::linear(-1), ArgumentError);
}

TEST(MeanModelSpec, KeysAndParamNames) {
  auto linear = spec_from_key("linear", 1);
  EXPECT_EQ(linear.n_params(), 3);
  EXPECT_TRUE(linear.include_intercept);
  auto logit = spec_from_key("logistic5", 1);
  EXPECT_EQ(logit.family, Family::ScaledLogistic);
  EXPECT_DOUBLE_EQ(logit.scale, 5.0);
  auto noint = spec_from_key("linear_no_intercept", 1);
  EXPECT_FALSE(noint.include_intercept);
  EXPECT_EQ(noint.n_params(), 2);
  EXPECT_THROW(spec_from_key("probit", 1), ArgumentError);

  auto names = param_names(linear);
  ASSERT_EQ(names.size(), 3u);
  EXPECT_EQ(names[0], "beta0");
  EXPECT_EQ(names[2], "beta2");
  auto names_no_int = param_names(noint);
  ASSERT_EQ(names_no_int.size(), 2u);
  EXPECT_EQ(names_no_int[0], "beta1");
}
