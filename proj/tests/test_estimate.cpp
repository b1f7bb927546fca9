#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "tvvar/estimate.hpp"
#include "tvvar/simulate.hpp"

using namespace tvvar;

namespace {

SeriesMatrix rotation_data(int T, double r = 0.995, double th = 0.3) {
  Mat a1(2, 2);
  a1 << r * std::cos(th), -r * std::sin(th), r * std::sin(th), r * std::cos(th);
  Vec a(2);
  a << 1.0, -0.5;
  Mat x(T, 2);
  Vec prev(2);
  prev << 3.0, 0.0;
  for (int t = 0; t < T; ++t) {
    prev = a + a1 * prev;
    x.row(t) = prev.transpose();
  }
  return SeriesMatrix(x);
}

VarCoefficients var1(double a11, double a12, double a21, double a22) {
  VarCoefficients c;
  c.a = Vec::Zero(2);
  c.a << 0.3, -0.2;
  Mat a1(2, 2);
  a1 << a11, a12, a21, a22;
  c.lags = {a1};
  c.omega = Mat::Identity(2, 2);
  c.omega(1, 0) = 0.4;
  return c;
}

SeriesMatrix noisy_var1(int T, std::uint64_t stream) {
  return simulate_tvvar(constant_path(var1(0.5, 0.1, -0.2, 0.3)), T, 77, {}, stream);
}

// Textbook OLS through the normal equations.
Mat ols(const RegressorFrame& f) {
  const Mat g = f.z.transpose() * f.z;
  return (g.ldlt().solve(f.z.transpose() * f.y)).transpose();
}

} // namespace

TEST(BuildRegressors, SmallExample) {
  Mat v(5, 1);
  v << 1, 2, 3, 4, 5;
  const RegressorFrame f = build_regressors(SeriesMatrix(v), 2);
  Mat z(3, 3);
  z << 1, 2, 1, 1, 3, 2, 1, 4, 3;
  EXPECT_EQ(f.z, z);
  EXPECT_EQ(f.y, (Mat(3, 1) << 3, 4, 5).finished());
  EXPECT_EQ(f.t_index, (std::vector<int>{3, 4, 5}));
}

TEST(BuildRegressors, ConstantSeriesAndShortSample) {
  const SeriesMatrix c(Mat::Constant(40, 2, 1.5));
  const RegressorFrame f = build_regressors(c, 1);
  EXPECT_TRUE((f.z.col(0).array() == 1.0).all());
  EXPECT_TRUE((f.z.rightCols(2).array() == 1.5).all());
  EXPECT_TRUE((f.y.array() == 1.5).all());
  Mat v(5, 1);
  v << 1, 2, 3, 4, 5;
  EXPECT_THROW(build_regressors(SeriesMatrix(v), 4), DataError);
}

TEST(FitTvVar, ZeroNoiseRecovery) {
  const SeriesMatrix x = rotation_data(300);
  const double r = 0.995, th = 0.3;
  Mat truth(2, 3);
  truth << 1.0, r * std::cos(th), -r * std::sin(th), -0.5, r * std::sin(th), r * std::cos(th);
  const TvVarFit fit = fit_tvvar(x, 1, 0.2);
  for (std::size_t i = 0; i < fit.grid.size(); ++i) {
    if (fit.grid[i] < 0.2 || fit.grid[i] > 0.8) continue;
    EXPECT_LT((fit.A_hat[i] - truth).cwiseAbs().maxCoeff(), 1e-8) << "tau " << fit.grid[i];
  }
}

TEST(FitTvVar, UniformFullWindowIsOls) {
  const SeriesMatrix x = noisy_var1(150, 1);
  const RegressorFrame f = build_regressors(x, 2);
  const TvVarFit fit = fit_tvvar(f, KernelSpec{KernelFamily::Uniform, 5.0}, {0.1, 0.5, 1.0});
  const Mat b = ols(f);
  for (const Mat& a : fit.A_hat) EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(FitTvVar, ResidualsUseLocalCoefficients) {
  const SeriesMatrix x = noisy_var1(120, 2);
  const TvVarFit fit = fit_tvvar(x, 1, 0.3);
  for (int r : {0, 37, 118}) {
    const Mat a = local_coefficients(fit.frame, fit.frame.tau(r), fit.kernel).coef;
    const Vec eta = fit.frame.y.row(r).transpose() - a * fit.frame.z.row(r).transpose();
    EXPECT_LT((eta - fit.residuals.row(r).transpose()).norm(), 1e-12);
  }
}

TEST(FitTvVar, ConstantSeriesIsSingular) {
  const SeriesMatrix c(Mat::Constant(60, 1, 2.0));
  EXPECT_THROW(fit_tvvar(c, 1, 0.3), SingularDesign);
}

TEST(FitTvVar, VectorizedFormEquivalence) {
  const SeriesMatrix x = noisy_var1(200, 3);
  const TvVarFit fit = fit_tvvar(x, 2, 0.25, {0.4});
  const RegressorFrame& f = fit.frame;
  const int d = f.d, k = f.k();
  Mat lhs = Mat::Zero(d * k, d * k);
  Vec rhs = Vec::Zero(d * k);
  for (int r = 0; r < f.n(); ++r) {
    const double w = kernel_scaled(f.tau(r) - 0.4, fit.kernel);
    if (w <= 0) continue;
    const Mat Z = kron(f.z.row(r).transpose(), Mat::Identity(d, d)); // Z_{t-1} = z (x) I_d
    lhs += w * Z * Z.transpose();
    rhs += w * Z * f.y.row(r).transpose();
  }
  const Vec got = lhs.ldlt().solve(rhs);
  EXPECT_LT((got - vec(fit.A_hat[0])).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(FitTvVar, AffineEquivariance) {
  const SeriesMatrix x = noisy_var1(160, 4);
  SeriesMatrix y = x;
  const double c = 10.0;
  y.values.col(1) *= c;
  const std::vector<double> grid{0.3, 0.6};
  const TvVarFit fx = fit_tvvar(x, 2, 0.3, grid);
  const TvVarFit fy = fit_tvvar(y, 2, 0.3, grid);
  Vec dscale(2);
  dscale << 1.0, c;
  Vec rscale(5);
  rscale << 1.0, 1.0, c, 1.0, c;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Mat expectA = dscale.asDiagonal() * fx.A_hat[i] * rscale.cwiseInverse().asDiagonal();
    EXPECT_LT(((fy.A_hat[i] - expectA).array() / expectA.array().abs().max(1e-3)).abs().maxCoeff(), 1e-10);
    const Mat expectO = dscale.asDiagonal() * fx.Omega_hat[i] * dscale.asDiagonal();
    EXPECT_LT(((fy.Omega_hat[i] - expectO).array() / expectO.array().abs()).abs().maxCoeff(), 1e-10);
  }
}

TEST(FitTvVar, OmegaIsPsd) {
  const SeriesMatrix x = noisy_var1(100, 5);
  const TvVarFit fit = fit_tvvar(x, 1, 0.15);
  for (const Mat& o : fit.Omega_hat) {
    Eigen::SelfAdjointEigenSolver<Mat> es(o);
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-12);
    EXPECT_EQ(o, o.transpose());
  }
}

TEST(FitTvVar, ParallelismDoesNotChangeOutput) {
  const SeriesMatrix x = noisy_var1(180, 6);
  set_max_threads(1);
  const TvVarFit a = fit_tvvar(x, 2, 0.2);
  set_max_threads(3);
  const TvVarFit b = fit_tvvar(x, 2, 0.2);
  set_max_threads(0);
  for (std::size_t i = 0; i < a.grid.size(); ++i) {
    EXPECT_EQ(a.A_hat[i], b.A_hat[i]);
    EXPECT_EQ(a.Omega_hat[i], b.Omega_hat[i]);
  }
}

TEST(SigmaHat, InterceptOnly) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n;
  Mat v(400, 1);
  for (int t = 0; t < 400; ++t) v(t, 0) = n(rng);
  const RegressorFrame f = build_regressors(SeriesMatrix(v), 0);
  const Mat s = sigma_hat(f, 0.5, KernelSpec{KernelFamily::Epanechnikov, 0.2});
  ASSERT_EQ(s.rows(), 1);
  EXPECT_NEAR(s(0, 0), 1.0, 5e-3);
}

TEST(SigmaHat, MatchesStationaryMoments) {
  const VarCoefficients c = var1(0.5, 0.1, -0.2, 0.3);
  const SeriesMatrix x = simulate_tvvar(constant_path(c), 40000, 3);
  const Mat s = sigma_hat(build_regressors(x, 1), 0.5, KernelSpec{KernelFamily::Epanechnikov, 0.4});
  // Lyapunov: vec Gamma0 = (I - A kron A)^{-1} vec Omega
  const Mat& a = c.lags[0];
  const Vec g = (Mat::Identity(4, 4) - kron(a, a)).lu().solve(vec(c.Omega()));
  const Mat gamma0 = unvec(g, 2, 2);
  const Vec mu = (Mat::Identity(2, 2) - a).lu().solve(c.a);
  Mat pop(3, 3);
  pop(0, 0) = 1.0;
  pop.block(0, 1, 1, 2) = mu.transpose();
  pop.block(1, 0, 2, 1) = mu;
  pop.block(1, 1, 2, 2) = gamma0 + mu * mu.transpose();
  EXPECT_LT((s - pop).cwiseAbs().maxCoeff(), 0.05);
}

TEST(VHat, SymmetricAndScalarOracle) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n;
  Mat v(300, 1);
  for (int t = 0; t < 300; ++t) v(t, 0) = 0.5 + 1.3 * n(rng);
  const KernelSpec spec{KernelFamily::Epanechnikov, 0.25};
  const TvVarFit fit = fit_tvvar(build_regressors(SeriesMatrix(v), 0), spec, {0.5});
  const TvVarCovariance cov = v_hat(fit, 0.5);
  EXPECT_EQ(cov.v, cov.v.transpose());
  double s4 = 0.0;
  for (int r = 0; r < fit.frame.n(); ++r) {
    const double k = kernel_scaled(fit.frame.tau(r) - 0.5, spec);
    s4 += std::pow(fit.residuals(r, 0), 4) * k * k;
  }
  const double om = cov.omega_hat(0, 0);
  const double oracle = 0.25 / 300 * s4 - 0.6 * om * om;
  EXPECT_NEAR(cov.v22(0, 0), oracle, 1e-12 * std::abs(oracle));
  EXPECT_NEAR(cov.v11(0, 0), 0.6 * om / cov.sigma_hat(0, 0), 1e-12);
}

TEST(VHat, CrossBlockVanishesForGaussianNoise) {
  const int reps = 300, T = 300;
  const KernelSpec spec{KernelFamily::Epanechnikov, 0.3};
  std::vector<Vec> draws;
  for (int r = 0; r < reps; ++r) {
    auto rng = stream_engine(10, static_cast<std::uint64_t>(r));
    std::normal_distribution<double> n;
    Mat v(T, 2);
    for (int t = 0; t < T; ++t) v.row(t) << n(rng), n(rng);
    const TvVarFit fit = fit_tvvar(build_regressors(SeriesMatrix(v), 0), spec, {0.5});
    draws.push_back(vec(v_hat(fit, 0.5).v21));
  }
  Vec mean = Vec::Zero(draws[0].size());
  for (const Vec& d : draws) mean += d;
  mean /= reps;
  Vec var = Vec::Zero(mean.size());
  for (const Vec& d : draws) var += (d - mean).cwiseAbs2();
  var /= reps - 1;
  for (Eigen::Index i = 0; i < mean.size(); ++i) {
    EXPECT_LT(std::abs(mean(i)), 3.0 * std::sqrt(var(i) / reps) + 1e-12) << "entry " << i;
  }
}

TEST(PointwiseCi, AlphaOneIsDegenerate) {
  const TvVarFit fit = fit_tvvar(noisy_var1(150, 11), 1, 0.3, {0.5});
  const PointwiseCi ci = pointwise_ci_at(fit, 0, 1.0);
  EXPECT_EQ(ci.lower, ci.estimate);
  EXPECT_EQ(ci.upper, ci.estimate);
  const PointwiseCi ci95 = pointwise_ci_at(fit, 0, 0.05);
  EXPECT_TRUE((ci95.lower.array() <= ci95.estimate.array()).all());
  EXPECT_TRUE((ci95.upper.array() >= ci95.estimate.array()).all());
  EXPECT_THROW(pointwise_ci_at(fit, 0, 0.0), ConfigError);
}

TEST(PointwiseCi, StandardErrorScaling) {
  const TvVarFit fit = fit_tvvar(noisy_var1(150, 12), 1, 0.3, {0.5});
  const TvVarCovariance cov = v_hat(fit, 0.5);
  const PointwiseCi ci = pointwise_ci(fit, cov, 0.5, 0.05);
  for (Eigen::Index i = 0; i < ci.se.size(); ++i) {
    EXPECT_NEAR(ci.se(i), std::sqrt(std::max(0.0, cov.v(i, i)) / (150 * 0.3)), 1e-15);
  }
}
