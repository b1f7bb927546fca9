#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "tvvar/algebra.hpp"

using namespace tvvar;

namespace {

Mat random_mat(std::mt19937_64& rng, int r, int c) {
  std::normal_distribution<double> n;
  Mat m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = n(rng);
  return m;
}

Mat m2(double a, double b, double c, double d) {
  Mat m(2, 2);
  m << a, b, c, d;
  return m;
}

} // namespace

TEST(Vec, ColumnStacking) {
  EXPECT_EQ(vec(m2(1, 2, 3, 4)), (Vec(4) << 1, 3, 2, 4).finished());
  EXPECT_EQ(vec(Mat::Identity(2, 2)), (Vec(4) << 1, 0, 0, 1).finished());
  EXPECT_EQ(vec(Mat::Constant(1, 1, 7.5)), Vec::Constant(1, 7.5));
}

TEST(Vec, PositionOfEntry) {
  std::mt19937_64 rng(1);
  const Mat m = random_mat(rng, 3, 4);
  const Vec v = vec(m);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 4; ++j) EXPECT_EQ(v(j * 3 + i), m(i, j));
  EXPECT_EQ(unvec(v, 3, 4), m);
}

TEST(Vech, LowerTriangle) {
  EXPECT_EQ(vech(m2(1, 2, 2, 3)), (Vec(3) << 1, 2, 3).finished());
  EXPECT_EQ(vech(Mat::Identity(3, 3)), (Vec(6) << 1, 0, 0, 1, 0, 1).finished());
  EXPECT_EQ(vech(Mat::Constant(1, 1, 5)), Vec::Constant(1, 5));
  EXPECT_THROW(vech(Mat::Zero(2, 3)), std::invalid_argument);
}

TEST(Vech, UnvechSymmetrizes) {
  const Mat s = m2(4, 1, 1, 9);
  EXPECT_EQ(unvech(vech(s)), s);
}

TEST(Commutation, Examples) {
  EXPECT_EQ(commutation_matrix(1, 1), Mat::Identity(1, 1));
  const Vec v = commutation_matrix(2, 2) * vec(m2(1, 2, 3, 4));
  EXPECT_EQ(v, (Vec(4) << 1, 2, 3, 4).finished());
  const Mat k = commutation_matrix(2, 3);
  EXPECT_EQ(k.rowwise().sum(), Vec::Ones(6));
  EXPECT_EQ(k.colwise().sum().transpose(), Vec::Ones(6));
  EXPECT_EQ(k.transpose() * k, Mat::Identity(6, 6));
}

TEST(Commutation, TransposesEveryMatrix) {
  std::mt19937_64 rng(2);
  for (int m = 1; m <= 5; ++m) {
    for (int n = 1; n <= 5; ++n) {
      const Mat g = random_mat(rng, m, n);
      EXPECT_EQ(commutation_matrix(m, n) * vec(g), vec(g.transpose()));
      EXPECT_EQ(commutation_matrix(m, n) * commutation_matrix(n, m), Mat::Identity(m * n, m * n));
    }
  }
}

TEST(Elimination, Examples) {
  EXPECT_EQ(elimination_matrix(1), Mat::Identity(1, 1));
  EXPECT_EQ(elimination_matrix(2) * vec(m2(1, 2, 2, 3)), (Vec(3) << 1, 2, 3).finished());
  EXPECT_EQ(elimination_matrix(3) * vec(Mat::Identity(3, 3)), vech(Mat::Identity(3, 3)));
}

TEST(Elimination, RoundTripAndShape) {
  std::mt19937_64 rng(3);
  for (int d = 1; d <= 6; ++d) {
    const Mat l = elimination_matrix(d);
    ASSERT_EQ(l.rows(), d * (d + 1) / 2);
    ASSERT_EQ(l.cols(), d * d);
    for (Eigen::Index r = 0; r < l.rows(); ++r) {
      EXPECT_EQ(l.row(r).sum(), 1.0);
      EXPECT_EQ((l.row(r).array() * (1.0 - l.row(r).array())).abs().sum(), 0.0);
    }
    const Mat f = random_mat(rng, d, d);
    EXPECT_EQ(l * vec(f), vech(f));
  }
}

TEST(Kron, MixedProduct) {
  std::mt19937_64 rng(4);
  const Mat a = random_mat(rng, 2, 3), b = random_mat(rng, 3, 2);
  const Mat c = random_mat(rng, 3, 2), d = random_mat(rng, 2, 4);
  EXPECT_LT((kron(a, b) * kron(c, d) - kron(a * c, b * d)).norm(), 1e-12);
  // vec(ABC) = (C^T kron A) vec(B)
  const Mat x = random_mat(rng, 3, 3);
  EXPECT_LT((vec(a * x * c) - kron(c.transpose(), a) * vec(x)).norm(), 1e-12);
}

TEST(Cholesky, Examples) {
  const Mat w = cholesky_lower(m2(4, 2, 2, 5));
  EXPECT_LT((w - m2(2, 0, 1, 2)).norm(), 1e-15);
  EXPECT_EQ(cholesky_lower(Mat::Identity(3, 3)), Mat::Identity(3, 3));
  try {
    cholesky_lower(m2(1, 2, 2, 1));
    FAIL() << "expected a factorization failure";
  } catch (const FactorizationFailure& e) {
    EXPECT_EQ(e.pivot(), 2);
  }
}

TEST(Cholesky, RoundTrip) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.2, 2.0);
  for (int d = 1; d <= 6; ++d) {
    Mat w = random_mat(rng, d, d).triangularView<Eigen::Lower>();
    for (int i = 0; i < d; ++i) w(i, i) = u(rng);
    const Mat got = cholesky_lower(w * w.transpose());
    EXPECT_LT((got - w).norm() / w.norm(), 1e-10);
    EXPECT_LT((got * got.transpose() - w * w.transpose()).norm() / (w * w.transpose()).norm(), 1e-10);
  }
}

TEST(Cholesky, AbsorbsRoundingAsymmetry) {
  Mat s = m2(4, 2, 2 + 1e-14, 5);
  EXPECT_NO_THROW(cholesky_lower(s));
}

TEST(Companion, Examples) {
  EXPECT_EQ(build_companion(std::vector<Mat>{Mat::Constant(1, 1, 0.5)}).mat, Mat::Constant(1, 1, 0.5));
  const auto c = build_companion(std::vector<Mat>{Mat::Constant(1, 1, 0.5), Mat::Constant(1, 1, 0.3)});
  EXPECT_EQ(c.mat, m2(0.5, 0.3, 1, 0));
  std::mt19937_64 rng(6);
  const std::vector<Mat> lags{random_mat(rng, 2, 2), random_mat(rng, 2, 2)};
  const auto big = build_companion(lags);
  EXPECT_EQ(big.mat.bottomLeftCorner(2, 2), Mat::Identity(2, 2));
  EXPECT_EQ(big.mat.bottomRightCorner(2, 2), Mat::Zero(2, 2));
  EXPECT_EQ(big.lag(1), lags[0]);
  EXPECT_EQ(big.lag(2), lags[1]);
  EXPECT_THROW(build_companion(std::vector<Mat>{Mat::Zero(2, 2), Mat::Zero(3, 3)}), std::invalid_argument);
}

TEST(Companion, ReadBackIsBitExact) {
  std::mt19937_64 rng(7);
  for (int p = 1; p <= 4; ++p) {
    std::vector<Mat> lags;
    for (int j = 0; j < p; ++j) lags.push_back(random_mat(rng, 3, 3));
    const auto c = build_companion(lags);
    for (int j = 1; j <= p; ++j) EXPECT_EQ(c.lag(j), lags[static_cast<std::size_t>(j - 1)]);
  }
}

TEST(SpectralRadius, Examples) {
  Mat d = Mat::Zero(2, 2);
  d(0, 0) = 0.5;
  d(1, 1) = -0.2;
  EXPECT_NEAR(spectral_radius(d), 0.5, 1e-12);
  EXPECT_EQ(spectral_radius(Mat::Zero(3, 3)), 0.0);
  // roots of l^2 - 0.5 l - 0.3
  const double oracle = (0.5 + std::sqrt(0.25 + 1.2)) / 2.0;
  EXPECT_NEAR(spectral_radius(m2(0.5, 0.3, 1, 0)), oracle, 1e-12);
}

TEST(SpectralRadius, ComplexPair) {
  const double r = 0.9, th = 0.7;
  const Mat rot = m2(r * std::cos(th), -r * std::sin(th), r * std::sin(th), r * std::cos(th));
  EXPECT_NEAR(spectral_radius(rot), r, 1e-12);
}

TEST(ClipEigenvalues, FloorsSpectrum) {
  bool clipped = false;
  const Mat out = clip_eigenvalues(m2(1, 2, 2, 1), 0.0, &clipped);
  EXPECT_TRUE(clipped);
  Eigen::SelfAdjointEigenSolver<Mat> es(out);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-12);
}
