#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <span>
#include <string>
#include <vector>

#include "tvvar/error.hpp"

namespace tvvar {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// Column-stacking: entry (i,j) lands at j*rows+i.
inline Vec vec(const Mat& m) {
  return Eigen::Map<const Vec>(m.data(), m.size());
}

/// Inverse of vec for a rows x cols matrix.
inline Mat unvec(const Vec& v, Eigen::Index rows, Eigen::Index cols) {
  if (v.size() != rows * cols) {
    throw std::invalid_argument("unvec: length mismatch");
  }
  return Eigen::Map<const Mat>(v.data(), rows, cols);
}

/// Column-stacked lower triangle (diagonal included).
inline Vec vech(const Mat& m) {
  if (m.rows() != m.cols()) {
    throw std::invalid_argument("vech: matrix must be square, got " + std::to_string(m.rows()) +
                                "x" + std::to_string(m.cols()));
  }
  const Eigen::Index d = m.rows();
  Vec out(d * (d + 1) / 2);
  Eigen::Index k = 0;
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index i = j; i < d; ++i) out(k++) = m(i, j);
  }
  return out;
}

/// Symmetric matrix whose vech is `v`.
inline Mat unvech(const Vec& v) {
  const auto d = static_cast<Eigen::Index>((std::sqrt(8.0 * static_cast<double>(v.size()) + 1.0) - 1.0) / 2.0 + 0.5);
  if (d * (d + 1) / 2 != v.size()) throw std::invalid_argument("unvech: length is not triangular");
  Mat m(d, d);
  Eigen::Index k = 0;
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index i = j; i < d; ++i) {
      m(i, j) = v(k);
      m(j, i) = v(k);
      ++k;
    }
  }
  return m;
}

inline Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

/// K_{mn}: maps vec(G) to vec(G^T) for an m x n matrix G.
inline Mat commutation_matrix(int m, int n) {
  if (m < 1 || n < 1) throw std::invalid_argument("commutation_matrix: m,n must be >= 1");
  Mat k = Mat::Zero(m * n, m * n);
  // G(i,j) sits at j*m+i in vec(G) and at i*n+j in vec(G^T).
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) k(i * n + j, j * m + i) = 1.0;
  }
  return k;
}

/// L_d: maps vec(F) to vech(F).
inline Mat elimination_matrix(int d) {
  if (d < 1) throw std::invalid_argument("elimination_matrix: d must be >= 1");
  Mat l = Mat::Zero(d * (d + 1) / 2, d * d);
  int row = 0;
  for (int j = 0; j < d; ++j) {
    for (int i = j; i < d; ++i) l(row++, j * d + i) = 1.0;
  }
  return l;
}

/// Lower Cholesky factor of (omega + omega^T)/2. Throws FactorizationFailure
/// with the 1-based index of the first non-positive pivot.
inline Mat cholesky_lower(const Mat& omega) {
  if (omega.rows() != omega.cols()) throw std::invalid_argument("cholesky_lower: matrix must be square");
  const Eigen::Index d = omega.rows();
  const Mat s = 0.5 * (omega + omega.transpose());
  Mat l = Mat::Zero(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    double diag = s(j, j);
    for (Eigen::Index k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
    if (!(diag > 0.0)) throw FactorizationFailure(static_cast<int>(j + 1));
    l(j, j) = std::sqrt(diag);
    for (Eigen::Index i = j + 1; i < d; ++i) {
      double acc = s(i, j);
      for (Eigen::Index k = 0; k < j; ++k) acc -= l(i, k) * l(j, k);
      l(i, j) = acc / l(j, j);
    }
  }
  return l;
}

/// dp x dp companion form of a VAR(p) lag polynomial.
struct CompanionMatrix {
  int d = 0;
  int p = 0;
  Mat mat;

  /// Lag matrix A_j, 1-based.
  Mat lag(int j) const { return mat.block(0, (j - 1) * d, d, d); }
  /// J Phi^k J^T style selector J = [I_d, 0].
  Mat selector() const {
    Mat j = Mat::Zero(d, d * p);
    j.leftCols(d).setIdentity();
    return j;
  }
};

inline CompanionMatrix build_companion(std::span<const Mat> a_mats) {
  if (a_mats.empty()) throw std::invalid_argument("build_companion: need at least one lag matrix");
  const auto d = static_cast<int>(a_mats.front().rows());
  const auto p = static_cast<int>(a_mats.size());
  for (const auto& a : a_mats) {
    if (a.rows() != d || a.cols() != d) {
      throw std::invalid_argument("build_companion: all lag matrices must be " + std::to_string(d) +
                                  "x" + std::to_string(d));
    }
  }
  CompanionMatrix c{d, p, Mat::Zero(d * p, d * p)};
  for (int j = 0; j < p; ++j) c.mat.block(0, j * d, d, d) = a_mats[static_cast<std::size_t>(j)];
  if (p > 1) c.mat.block(d, 0, d * (p - 1), d * (p - 1)).setIdentity();
  return c;
}

inline CompanionMatrix build_companion(const std::vector<Mat>& a_mats) {
  return build_companion(std::span<const Mat>(a_mats));
}

/// Largest eigenvalue modulus via real Schur (QR) iteration, capped at 500*n sweeps.
inline double spectral_radius(const Mat& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("spectral_radius: matrix must be square");
  if (m.size() == 0) return 0.0;
  if (m.rows() == 1) return std::abs(m(0, 0));
  Eigen::EigenSolver<Mat> es;
  es.setMaxIterations(500 * m.rows());
  es.compute(m, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) {
    throw ConvergenceFailure("spectral_radius: eigenvalue iteration did not converge");
  }
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// Symmetric eigenvalue clipping: returns V max(D, floor) V^T.
inline Mat clip_eigenvalues(const Mat& s, double floor, bool* clipped = nullptr) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (s + s.transpose()));
  Vec ev = es.eigenvalues();
  bool any = false;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < floor) {
      ev(i) = floor;
      any = true;
    }
  }
  if (clipped) *clipped = any;
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

} // namespace tvvar
