#pragma once

#include <cmath>
#include <vector>

#include "tvvar/algebra.hpp"
#include "tvvar/error.hpp"
#include "tvvar/estimate.hpp"
#include "tvvar/parallel.hpp"
#include "tvvar/stats.hpp"

namespace tvvar {

/// Lag blocks A_1..A_p of a d x (1+dp) coefficient matrix [a, A_1, ..., A_p].
inline std::vector<Mat> lag_matrices(const Mat& coef, int p) {
  const auto d = coef.rows();
  if (coef.cols() != 1 + d * p) throw std::invalid_argument("lag_matrices: coefficient shape mismatch");
  std::vector<Mat> out;
  for (int j = 0; j < p; ++j) out.push_back(coef.block(0, 1 + j * d, d, d));
  return out;
}

inline CompanionMatrix companion_of(const Mat& coef, int p) { return build_companion(lag_matrices(coef, p)); }

/// Psi_0 = I, Psi_j = J Phi^j J^T.
inline std::vector<Mat> psi_coeffs(const CompanionMatrix& phi, int j_max) {
  if (j_max < 0) throw std::invalid_argument("psi_coeffs: j_max must be >= 0");
  std::vector<Mat> psi;
  psi.reserve(static_cast<std::size_t>(j_max + 1));
  psi.push_back(Mat::Identity(phi.d, phi.d));
  Mat power = Mat::Identity(phi.d * phi.p, phi.d * phi.p);
  for (int j = 1; j <= j_max; ++j) {
    power = phi.mat * power;
    psi.push_back(power.topLeftCorner(phi.d, phi.d));
  }
  return psi;
}

/// Lower Cholesky factor, jittered by 1e-10*trace/d when Omega is near singular.
inline Mat identification_factor(const Mat& omega, bool* jittered = nullptr) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (omega + omega.transpose()), Eigen::EigenvaluesOnly);
  if (jittered) *jittered = false;
  if (es.eigenvalues().minCoeff() < 1e-10) {
    if (jittered) *jittered = true;
    const double bump = 1e-10 * omega.trace() / static_cast<double>(omega.rows());
    return cholesky_lower(omega + bump * Mat::Identity(omega.rows(), omega.cols()));
  }
  return cholesky_lower(omega);
}

struct StructuralIrf {
  std::vector<Mat> B;  ///< B_j = Psi_j omega, j = 0..j_max
  Mat omega_chol;
  double radius = 0.0;
  bool unstable = false; ///< spectral radius >= 1; responses do not decay
  bool jittered = false;
};

inline StructuralIrf structural_irf(const Mat& coef, const Mat& omega, int p, int j_max) {
  StructuralIrf out;
  out.omega_chol = identification_factor(omega, &out.jittered);
  const CompanionMatrix phi = companion_of(coef, p);
  out.radius = spectral_radius(phi.mat);
  out.unstable = !(out.radius < 1.0);
  for (const Mat& psi : psi_coeffs(phi, j_max)) out.B.push_back(psi * out.omega_chol);
  return out;
}

inline StructuralIrf structural_irf(const TvVarFit& fit, double tau, int j_max) {
  return structural_irf(coefficients_at(fit, tau), omega_at(fit, tau), fit.p, j_max);
}

/// Jacobians of vec(B_j) with respect to vec(A) (C_{j,1}) and vech(Omega) (C_{j,2}).
struct IrfJacobian {
  Mat c1; ///< d^2 x d(1+dp)
  Mat c2; ///< d^2 x d(d+1)/2
};

inline IrfJacobian irf_jacobian(const Mat& coef, const Mat& omega_chol, int p, int j) {
  const auto d = static_cast<int>(coef.rows());
  const int k = 1 + d * p;
  const int dd = d * d;
  const Mat l = elimination_matrix(d);
  const Mat i_dd = Mat::Identity(dd, dd);
  const Mat inner = l * (i_dd + commutation_matrix(d, d)) * kron(omega_chol, Mat::Identity(d, d)) * l.transpose();
  const Mat c02 = l.transpose() * inner.partialPivLu().solve(Mat::Identity(inner.rows(), inner.cols()));

  IrfJacobian jac;
  const CompanionMatrix phi = companion_of(coef, p);
  const int dp = d * p;
  if (j == 0) {
    jac.c1 = Mat::Zero(dd, d * k);
    jac.c2 = c02;
    return jac;
  }
  // powers[m] = Phi^m, m = 0..j
  std::vector<Mat> powers{Mat::Identity(dp, dp)};
  for (int m = 1; m <= j; ++m) powers.push_back(phi.mat * powers.back());
  Mat sum = Mat::Zero(dd, d * dp);
  for (int m = 0; m <= j - 1; ++m) {
    // J (Phi^T)^{j-1-m} is the transpose of the first d columns of Phi^{j-1-m}.
    const Mat left = powers[static_cast<std::size_t>(j - 1 - m)].leftCols(d).transpose();
    const Mat right = powers[static_cast<std::size_t>(m)].topLeftCorner(d, d);
    sum += kron(left, right);
  }
  Mat select = Mat::Zero(d * dp, d * k);
  select.rightCols(d * dp).setIdentity();
  jac.c1 = kron(omega_chol.transpose(), Mat::Identity(d, d)) * sum * select;
  jac.c2 = kron(Mat::Identity(d, d), powers[static_cast<std::size_t>(j)].topLeftCorner(d, d)) * c02;
  return jac;
}

/// Delta-method covariance [C1, C2] V [C1, C2]^T of vec(B_j).
inline Mat irf_covariance(const Mat& coef, const Mat& omega_chol, int p, const Mat& v, int j) {
  const IrfJacobian jac = irf_jacobian(coef, omega_chol, p, j);
  Mat c(jac.c1.rows(), jac.c1.cols() + jac.c2.cols());
  c << jac.c1, jac.c2;
  if (c.cols() != v.rows()) throw std::invalid_argument("irf_covariance: V dimension mismatch");
  Mat s = c * v * c.transpose();
  return 0.5 * (s + s.transpose());
}

inline Mat irf_covariance(const TvVarFit& fit, const TvVarCovariance& cov, double tau, int j) {
  const Mat coef = coefficients_at(fit, tau);
  return irf_covariance(coef, identification_factor(cov.omega_hat), fit.p, cov.v, j);
}

/// J (I - Phi)^{-1} J^T a: the long-run mean implied by the local VAR.
inline Vec longrun_mean(const Mat& coef, int p, double tau = 0.0) {
  const auto d = coef.rows();
  const CompanionMatrix phi = companion_of(coef, p);
  const double rho = spectral_radius(phi.mat);
  if (!(rho < 1.0)) throw NonStationary(tau, rho);
  Vec rhs = Vec::Zero(d * p);
  rhs.head(d) = coef.col(0);
  const Mat lhs = Mat::Identity(d * p, d * p) - phi.mat;
  return lhs.partialPivLu().solve(rhs).head(d);
}

inline Vec longrun_mean(const TvVarFit& fit, double tau) { return longrun_mean(coefficients_at(fit, tau), fit.p, tau); }

/// Structural responses with delta-method standard errors over a grid.
struct IrfResult {
  std::vector<double> grid;
  int horizons = 0; ///< j = 0..horizons-1
  double alpha = 0.05;
  std::vector<std::vector<Mat>> B_hat;     ///< [tau][j], d x d
  std::vector<std::vector<Mat>> Sigma_Bj;  ///< [tau][j], d^2 x d^2
  std::vector<std::vector<Vec>> se;        ///< [tau][j], sqrt(diag/(T h)) in vec order
  std::vector<bool> unstable;
  std::vector<bool> jittered;
  std::vector<int> clipped;                ///< negative variances clipped per tau
};

inline IrfResult compute_irf(const TvVarFit& fit, const std::vector<double>& taus, int horizons, double alpha) {
  if (horizons < 1) throw ConfigError("irf: need at least one horizon");
  IrfResult res;
  res.grid = taus;
  res.horizons = horizons;
  res.alpha = alpha;
  const std::size_t g = taus.size();
  res.B_hat.resize(g);
  res.Sigma_Bj.resize(g);
  res.se.resize(g);
  res.unstable.assign(g, false);
  res.jittered.assign(g, false);
  res.clipped.assign(g, 0);
  const double scale = 1.0 / (static_cast<double>(fit.T) * fit.h());
  parallel_for(g, [&](std::size_t i) {
    const double tau = taus[i];
    const Mat coef = coefficients_at(fit, tau);
    const TvVarCovariance cov = v_hat(fit, tau);
    const StructuralIrf irf = structural_irf(coef, cov.omega_hat, fit.p, horizons - 1);
    res.unstable[i] = irf.unstable;
    res.jittered[i] = irf.jittered;
    for (int j = 0; j < horizons; ++j) {
      res.B_hat[i].push_back(irf.B[static_cast<std::size_t>(j)]);
      Mat s = irf_covariance(coef, irf.omega_chol, fit.p, cov.v, j);
      Vec se(s.rows());
      for (Eigen::Index r = 0; r < s.rows(); ++r) {
        double var = s(r, r);
        if (var < 0.0) {
          var = 0.0;
          ++res.clipped[i];
        }
        se(r) = std::sqrt(var * scale);
      }
      res.Sigma_Bj[i].push_back(std::move(s));
      res.se[i].push_back(std::move(se));
    }
  });
  return res;
}

} // namespace tvvar
