#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "tvvar/forecast.hpp"
#include "tvvar/simulate.hpp"

using namespace tvvar;

namespace {

Mat rotation(double r, double th) {
  Mat m(2, 2);
  m << r * std::cos(th), -r * std::sin(th), r * std::sin(th), r * std::cos(th);
  return m;
}

SeriesMatrix deterministic(int T) {
  const Mat a1 = rotation(0.98, 0.4);
  Vec a(2);
  a << 0.5, 0.2;
  Mat x(T, 2);
  Vec prev(2);
  prev << 4.0, -1.0;
  for (int t = 0; t < T; ++t) {
    prev = a + a1 * prev;
    x.row(t) = prev.transpose();
  }
  return SeriesMatrix(x);
}

SeriesMatrix noisy(int T, std::uint64_t stream) {
  VarCoefficients c;
  c.a = Vec::Zero(2);
  c.a << 0.1, 0.3;
  c.lags = {(Mat(2, 2) << 0.5, 0.1, -0.2, 0.3).finished()};
  c.omega = Mat::Identity(2, 2);
  return simulate_tvvar(constant_path(c), T, 21, {}, stream);
}

} // namespace

TEST(ConstantVar, ExactOnDeterministicData) {
  const Mat b = fit_constant_var(deterministic(200), 1);
  Mat truth(2, 3);
  truth << 0.5, rotation(0.98, 0.4).row(0), 0.2, rotation(0.98, 0.4).row(1);
  EXPECT_LT((b - truth).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(ConstantVar, MatchesFullWindowUniformFit) {
  const SeriesMatrix x = noisy(300, 1);
  const RegressorFrame f = build_regressors(x, 2);
  const Mat ols = fit_constant_var(f);
  const Mat local = local_coefficients(f, 0.5, KernelSpec{KernelFamily::Uniform, 5.0}).coef;
  EXPECT_LT((ols - local).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(ConstantVar, IidDataGivesSmallLagCoefficients) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n;
  const int T = 2000;
  Mat v(T, 2);
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = n(rng);
  const Mat b = fit_constant_var(SeriesMatrix(v), 1);
  EXPECT_LT(b.rightCols(2).cwiseAbs().maxCoeff(), 3.0 / std::sqrt(T));
}

TEST(ConstantVar, Errors) {
  EXPECT_THROW(fit_constant_var(noisy(50, 2), 0), ConfigError);
  EXPECT_THROW(fit_constant_var(SeriesMatrix(Mat::Constant(50, 2, 1.0)), 1), SingularDesign);
}

TEST(ForecastTask, Validation) {
  ForecastTask task;
  EXPECT_EQ(task.resolved_first_origin(100), 60);
  EXPECT_NO_THROW(task.validate(100, 2));
  task.horizons = {0};
  EXPECT_THROW(task.validate(100, 2), ConfigError);
  task.horizons = {1};
  task.first_origin = 5;
  EXPECT_THROW(task.validate(100, 2), ConfigError);
  task.first_origin = 99;
  task.horizons = {4};
  EXPECT_THROW(task.validate(100, 2), DataError);
}

TEST(ExpandingForecast, PerfectForesightWhenIterated) {
  ForecastTask task;
  task.tv_lag = task.cvar_lag = 1;
  task.bandwidth = 0.5;
  task.iterated = true;
  const RmseTable t = expanding_forecast(deterministic(200), task);
  for (std::size_t m = 0; m < 2; ++m)
    for (std::size_t k = 0; k < t.horizons.size(); ++k)
      for (double r : t.rmse[m][k]) EXPECT_LT(r, 1e-8);
  EXPECT_TRUE(t.skipped.empty());
}

TEST(ExpandingForecast, BenchmarkRatioIsOne) {
  ForecastTask task;
  task.bandwidth = 0.3;
  const RmseTable t = expanding_forecast(noisy(200, 3), task);
  for (const auto& row : t.ratio[0])
    for (double r : row) EXPECT_EQ(r, 1.0);
  for (std::size_t k = 0; k < t.horizons.size(); ++k) {
    for (std::size_t j = 0; j < 2; ++j) EXPECT_DOUBLE_EQ(t.ratio[1][k][j], t.rmse[1][k][j] / t.rmse[0][k][j]);
  }
}

TEST(ExpandingForecast, OriginCounts) {
  ForecastTask task;
  task.bandwidth = 0.3;
  task.horizons = {1, 4};
  const RmseTable t = expanding_forecast(noisy(100, 4), task);
  // origins 60..99; horizon h needs t + h <= 100
  EXPECT_EQ(t.evaluated[0], 40);
  EXPECT_EQ(t.evaluated[1], 37);
}

TEST(ExpandingForecast, ReselectsBandwidthOnSchedule) {
  ForecastTask task;
  task.reselect_every = 10;
  task.h_grid = {0.2, 0.4, 0.8};
  const RmseTable t = expanding_forecast(noisy(150, 5), task);
  ASSERT_EQ(t.bandwidths.size(), 6u);
  EXPECT_EQ(t.bandwidths[0].first, 90);
  EXPECT_EQ(t.bandwidths[1].first, 100);
}

TEST(ExpandingForecast, IndependentOfThreadCount) {
  ForecastTask task;
  task.reselect_every = 5;
  const SeriesMatrix x = noisy(160, 6);
  set_max_threads(1);
  const RmseTable a = expanding_forecast(x, task);
  set_max_threads(4);
  const RmseTable b = expanding_forecast(x, task);
  set_max_threads(0);
  EXPECT_EQ(a.rmse, b.rmse);
  EXPECT_EQ(a.bandwidths, b.bandwidths);
}
