#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "tvvar/algebra.hpp"
#include "tvvar/error.hpp"
#include "tvvar/kernel.hpp"
#include "tvvar/parallel.hpp"
#include "tvvar/regressors.hpp"
#include "tvvar/series.hpp"
#include "tvvar/stats.hpp"

namespace tvvar {

/// Local-constant kernel fit of a time-varying VAR(p).
struct TvVarFit {
  int p = 0;
  int d = 0;
  int T = 0;
  KernelSpec kernel;
  KernelMoments moments;
  std::vector<double> grid;
  std::vector<Mat> A_hat;      ///< per grid point, d x (1+dp): [a, A_1, ..., A_p]
  std::vector<Mat> Omega_hat;  ///< per grid point, d x d
  std::vector<bool> omega_flagged; ///< Omega_hat not positive definite at this grid point
  RegressorFrame frame;
  Mat residuals; ///< rows aligned with frame.t_index; eta_t = x_t - A(tau_t) z_{t-1}

  double h() const { return kernel.h; }
  int k() const { return 1 + d * p; }
};

/// Kernel-weighted residual covariance at tau.
inline Mat omega_at(const RegressorFrame& frame, const Mat& residuals, double tau, const KernelSpec& spec) {
  const auto [lo, hi] = kernel_window(frame, tau, spec.h);
  Mat acc = Mat::Zero(frame.d, frame.d);
  double wsum = 0.0;
  for (int r = lo; r < hi; ++r) {
    const double w = kernel_scaled(frame.tau(r) - tau, spec);
    if (w <= 0.0) continue;
    acc.noalias() += w * residuals.row(r).transpose() * residuals.row(r);
    wsum += w;
  }
  if (!(wsum > 0.0)) throw BandwidthTooSmall(tau, spec.h);
  acc /= wsum;
  return 0.5 * (acc + acc.transpose());
}

inline Mat omega_at(const TvVarFit& fit, double tau) { return omega_at(fit.frame, fit.residuals, tau, fit.kernel); }

inline Mat coefficients_at(const TvVarFit& fit, double tau) {
  return local_coefficients(fit.frame, tau, fit.kernel).coef;
}

/// Fit on the regressor frame's sample. An empty grid means the frame's own
/// {tau_t}.
inline TvVarFit fit_tvvar(const RegressorFrame& frame, const KernelSpec& spec, std::vector<double> grid = {}) {
  spec.validate();
  TvVarFit fit;
  fit.p = frame.p;
  fit.d = frame.d;
  fit.T = frame.T;
  fit.kernel = spec;
  fit.moments = kernel_moments(spec);
  fit.frame = frame;
  const int n = frame.n();
  const bool own_grid = grid.empty();
  if (own_grid) {
    for (int r = 0; r < n; ++r) grid.push_back(frame.tau(r));
  }
  fit.grid = grid;

  std::vector<Mat> at_t(static_cast<std::size_t>(n));
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t r) {
    at_t[r] = local_coefficients(fit.frame, fit.frame.tau(static_cast<int>(r)), spec).coef;
  });
  fit.residuals.resize(n, frame.d);
  for (int r = 0; r < n; ++r) {
    fit.residuals.row(r) = frame.y.row(r) - frame.z.row(r) * at_t[static_cast<std::size_t>(r)].transpose();
  }

  const std::size_t g = grid.size();
  fit.A_hat.resize(g);
  fit.Omega_hat.resize(g);
  fit.omega_flagged.assign(g, false);
  if (own_grid) {
    fit.A_hat = std::move(at_t);
  } else {
    parallel_for(g, [&](std::size_t i) { fit.A_hat[i] = local_coefficients(fit.frame, grid[i], spec).coef; });
  }
  for (std::size_t i = 0; i < g; ++i) {
    fit.Omega_hat[i] = omega_at(fit, grid[i]);
    Eigen::SelfAdjointEigenSolver<Mat> es(fit.Omega_hat[i], Eigen::EigenvaluesOnly);
    fit.omega_flagged[i] = !(es.eigenvalues().minCoeff() > 0.0);
  }
  return fit;
}

inline TvVarFit fit_tvvar(const SeriesMatrix& x, int p, double h, std::vector<double> grid = {},
                          KernelFamily family = KernelFamily::Epanechnikov) {
  if (p < 1) throw ConfigError("fit_tvvar: lag order must be >= 1");
  return fit_tvvar(build_regressors(x, p), KernelSpec{family, h}, std::move(grid));
}

/// (1/T) sum_t z_{t-1} z_{t-1}^T K_h(tau_t - tau).
inline Mat sigma_hat(const RegressorFrame& frame, double tau, const KernelSpec& spec) {
  const auto [lo, hi] = kernel_window(frame, tau, spec.h);
  Mat s = Mat::Zero(frame.k(), frame.k());
  double wsum = 0.0;
  for (int r = lo; r < hi; ++r) {
    const double w = kernel_scaled(frame.tau(r) - tau, spec);
    if (w <= 0.0) continue;
    s.noalias() += w * frame.z.row(r).transpose() * frame.z.row(r);
    wsum += w;
  }
  if (!(wsum > 0.0)) throw BandwidthTooSmall(tau, spec.h);
  return s / frame.T;
}

/// Blocks of the joint asymptotic covariance of (vec A_hat, vech Omega_hat).
struct TvVarCovariance {
  double tau = 0.0;
  Mat sigma_hat;
  Mat omega_hat;
  Mat v11; ///< d(1+dp) square
  Mat v21; ///< d(d+1)/2 x d(1+dp)
  Mat v22; ///< d(d+1)/2 square
  Mat v;   ///< assembled, symmetric
};

inline TvVarCovariance v_hat(const TvVarFit& fit, double tau) {
  const RegressorFrame& f = fit.frame;
  const int d = f.d, k = f.k();
  const int m = d * (d + 1) / 2;
  const double h = fit.h();
  const double v0 = fit.moments.v_tilde[0];

  TvVarCovariance cov;
  cov.tau = tau;
  cov.sigma_hat = sigma_hat(f, tau, fit.kernel);
  Eigen::LDLT<Mat> ldlt(cov.sigma_hat);
  Eigen::JacobiSVD<Mat> svd(cov.sigma_hat);
  const Vec sv = svd.singularValues();
  const double cond = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1) : std::numeric_limits<double>::infinity();
  if (ldlt.info() != Eigen::Success || !(cond <= kSingularCondition)) throw SingularDesign(tau, cond);
  Mat sigma_inv = ldlt.solve(Mat::Identity(k, k));
  sigma_inv = 0.5 * (sigma_inv + sigma_inv.transpose());

  cov.omega_hat = omega_at(fit, tau);
  cov.v11 = v0 * kron(sigma_inv, cov.omega_hat);

  const auto [lo, hi] = kernel_window(f, tau, h);
  Mat s21 = Mat::Zero(m, k * d);
  Mat s22 = Mat::Zero(m, m);
  for (int r = lo; r < hi; ++r) {
    const double kh = kernel_scaled(f.tau(r) - tau, fit.kernel);
    if (kh <= 0.0) continue;
    const Vec eta = fit.residuals.row(r).transpose();
    const Vec q = vech(eta * eta.transpose());
    const Vec zeta = kron(f.z.row(r).transpose(), eta); // Z_{t-1} eta_t = z_{t-1} (x) eta_t
    const double w = kh * kh;
    s21.noalias() += w * q * zeta.transpose();
    s22.noalias() += w * q * q.transpose();
  }
  const double scale = h / f.T;
  cov.v21 = scale * s21 * kron(sigma_inv, Mat::Identity(d, d));
  const Vec vo = vech(cov.omega_hat);
  cov.v22 = scale * s22 - v0 * vo * vo.transpose();

  cov.v.resize(k * d + m, k * d + m);
  cov.v.topLeftCorner(k * d, k * d) = cov.v11;
  cov.v.bottomLeftCorner(m, k * d) = cov.v21;
  cov.v.topRightCorner(k * d, m) = cov.v21.transpose();
  cov.v.bottomRightCorner(m, m) = cov.v22;
  cov.v = 0.5 * (cov.v + cov.v.transpose());
  return cov;
}

/// Pointwise normal intervals for (vec A_hat, vech Omega_hat) at one tau.
struct PointwiseCi {
  double tau = 0.0;
  Vec estimate;
  Vec se;
  Vec lower;
  Vec upper;
  int clipped = 0; ///< count of negative variances clipped to zero
};

/// estimate +/- z_{1-alpha/2} sqrt(diag(V)/(T h)); no bias correction.
inline PointwiseCi pointwise_ci(const Mat& a_hat, const Mat& omega_hat, const TvVarCovariance& cov, int T,
                                double h, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in (0,1)");
  PointwiseCi ci;
  ci.tau = cov.tau;
  const Vec va = vec(a_hat);
  const Vec vo = vech(omega_hat);
  ci.estimate.resize(va.size() + vo.size());
  ci.estimate << va, vo;
  if (cov.v.rows() != ci.estimate.size()) throw std::invalid_argument("pointwise_ci: covariance dimension mismatch");
  const double z = alpha >= 1.0 ? 0.0 : normal_quantile(1.0 - alpha / 2.0);
  const double scale = 1.0 / (static_cast<double>(T) * h);
  ci.se.resize(ci.estimate.size());
  for (Eigen::Index i = 0; i < ci.se.size(); ++i) {
    double var = cov.v(i, i);
    if (var < 0.0) {
      var = 0.0;
      ++ci.clipped;
    }
    ci.se(i) = std::sqrt(var * scale);
  }
  ci.lower = ci.estimate - z * ci.se;
  ci.upper = ci.estimate + z * ci.se;
  return ci;
}

inline PointwiseCi pointwise_ci(const TvVarFit& fit, const TvVarCovariance& cov, double tau, double alpha) {
  return pointwise_ci(coefficients_at(fit, tau), omega_at(fit, tau), cov, fit.T, fit.h(), alpha);
}

/// Same as above for grid point `i`, reusing the stored estimates.
inline PointwiseCi pointwise_ci_at(const TvVarFit& fit, std::size_t i, double alpha) {
  const TvVarCovariance cov = v_hat(fit, fit.grid[i]);
  return pointwise_ci(fit.A_hat[i], fit.Omega_hat[i], cov, fit.T, fit.h(), alpha);
}

} // namespace tvvar
