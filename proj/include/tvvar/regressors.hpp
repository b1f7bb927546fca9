#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "tvvar/algebra.hpp"
#include "tvvar/error.hpp"
#include "tvvar/kernel.hpp"
#include "tvvar/series.hpp"

namespace tvvar {

/// Lagged design for a VAR(p): rows z_{t-1}^T = (1, x_{t-1}^T, ..., x_{t-p}^T)
/// and responses x_t for t = first..T. Time indices are those of the original
/// series, so tau_t = t/T is unaffected by presample trimming.
struct RegressorFrame {
  int p = 0;
  int d = 0;
  int T = 0; ///< length of the source series
  Mat z;
  Mat y;
  std::vector<int> t_index;

  int n() const { return static_cast<int>(z.rows()); }
  int k() const { return 1 + d * p; }
  int first() const { return t_index.front(); }
  double tau(int row) const { return static_cast<double>(t_index[static_cast<std::size_t>(row)]) / T; }
};

/// `first_target` = 0 means p+1. A later first target lets several lag orders
/// share one estimation sample.
inline RegressorFrame build_regressors(const SeriesMatrix& x, int p, int first_target = 0) {
  if (p < 0) throw ConfigError("lag order must be non-negative");
  const int T = x.T();
  const int d = x.d();
  const int first = first_target == 0 ? p + 1 : first_target;
  if (first < p + 1) throw ConfigError("first target index must leave room for p lags");
  const int n = T - first + 1;
  const int k = 1 + d * p;
  if (n < k) {
    throw DataError("insufficient sample: T=" + std::to_string(T) + " leaves " + std::to_string(std::max(n, 0)) +
                    " usable rows for " + std::to_string(k) + " regressors at p=" + std::to_string(p));
  }
  RegressorFrame f;
  f.p = p;
  f.d = d;
  f.T = T;
  f.z.resize(n, k);
  f.y.resize(n, d);
  f.t_index.resize(static_cast<std::size_t>(n));
  for (int r = 0; r < n; ++r) {
    const int t = first + r;
    f.t_index[static_cast<std::size_t>(r)] = t;
    f.z(r, 0) = 1.0;
    for (int j = 1; j <= p; ++j) f.z.block(r, 1 + (j - 1) * d, 1, d) = x.values.row(t - j - 1);
    f.y.row(r) = x.values.row(t - 1);
  }
  return f;
}

/// Rows of `f` with |tau_t - tau| <= h, as a half-open index range.
inline std::pair<int, int> kernel_window(const RegressorFrame& f, double tau, double h) {
  const double centre = tau * f.T;
  const double reach = h * f.T * (1.0 + 1e-12);
  const int lo_t = static_cast<int>(std::ceil(centre - reach));
  const int hi_t = static_cast<int>(std::floor(centre + reach));
  const int lo = std::max(0, lo_t - f.first());
  const int hi = std::min(f.n(), hi_t - f.first() + 1);
  return {lo, std::max(lo, hi)};
}

/// Gram condition numbers above this are treated as a singular design.
inline constexpr double kSingularCondition = 1e12;

struct LocalSolution {
  Mat coef;          ///< d x k, [a, A_1, ..., A_p]
  double weight_sum; ///< sum of K_h over the window
  double condition;  ///< condition number of the weighted Gram matrix
};

/// Weighted least squares at tau via QR on sqrt-weighted rows.
inline LocalSolution local_coefficients(const RegressorFrame& f, double tau, const KernelSpec& spec) {
  const auto [lo, hi] = kernel_window(f, tau, spec.h);
  const int k = f.k();
  std::vector<int> rows;
  std::vector<double> w;
  double wsum = 0.0;
  for (int r = lo; r < hi; ++r) {
    const double kw = kernel_scaled(f.tau(r) - tau, spec);
    if (kw > 0.0) {
      rows.push_back(r);
      w.push_back(kw);
      wsum += kw;
    }
  }
  if (rows.empty()) throw BandwidthTooSmall(tau, spec.h);
  const auto m = static_cast<Eigen::Index>(rows.size());
  if (m < k) throw SingularDesign(tau, std::numeric_limits<double>::infinity());
  Mat zw(m, k), yw(m, f.d);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double s = std::sqrt(w[static_cast<std::size_t>(i)]);
    zw.row(i) = s * f.z.row(rows[static_cast<std::size_t>(i)]);
    yw.row(i) = s * f.y.row(rows[static_cast<std::size_t>(i)]);
  }
  Eigen::HouseholderQR<Mat> qr(zw);
  const Mat r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  const Vec sv = Eigen::JacobiSVD<Mat>(r).singularValues();
  const double smin = sv(sv.size() - 1);
  const double cond = smin > 0.0 ? (sv(0) / smin) * (sv(0) / smin) : std::numeric_limits<double>::infinity();
  if (!(cond <= kSingularCondition)) throw SingularDesign(tau, cond);
  const Mat b = qr.solve(yw); // k x d
  return {b.transpose(), wsum, cond};
}

/// Prefix sums of v^m z z^T and v^m z y^T (m = 0,1,2, v = centred time) so
/// that any quadratic-kernel weighted Gram matrix over a contiguous window is
/// assembled in O(k^2). Used by the selection loops, which refit at every
/// tau_t for many (p, h) pairs.
class LocalMomentPrefix {
public:
  explicit LocalMomentPrefix(const RegressorFrame& f) : frame_(&f) {
    const int n = f.n(), k = f.k(), d = f.d;
    centre_ = 0.5 * (f.T + 1);
    for (int m = 0; m < 3; ++m) {
      zz_[m] = Mat::Zero(k * k, n + 1);
      zy_[m] = Mat::Zero(k * d, n + 1);
    }
    Mat outer_zz(k, k), outer_zy(k, d);
    for (int r = 0; r < n; ++r) {
      const double v = position(r);
      outer_zz.noalias() = f.z.row(r).transpose() * f.z.row(r);
      outer_zy.noalias() = f.z.row(r).transpose() * f.y.row(r);
      const Eigen::Map<const Vec> fz(outer_zz.data(), k * k);
      const Eigen::Map<const Vec> fy(outer_zy.data(), k * d);
      double vm = 1.0;
      for (int m = 0; m < 3; ++m) {
        zz_[m].col(r + 1) = zz_[m].col(r) + vm * fz;
        zy_[m].col(r + 1) = zy_[m].col(r) + vm * fy;
        vm *= v;
      }
    }
  }

  struct Pass {
    Mat residual; ///< n x d in-sample residuals x_t - A(tau_t) z_{t-1}
    Vec leverage; ///< K(0) z^T G^{-1} z, the diagonal of the local hat matrix
    bool feasible = true;
    std::string reason;
  };

  /// Local fits at every row's own tau_t.
  Pass evaluate(const KernelSpec& spec) const {
    const RegressorFrame& f = *frame_;
    const int n = f.n(), k = f.k(), d = f.d;
    const auto [c0, c2] = kernel_polynomial(spec.family);
    const double inv_h2 = 1.0 / (spec.h * spec.h);
    Pass out;
    out.residual.resize(n, d);
    out.leverage.resize(n);
    Mat g(k, k), c(k, d);
    Eigen::LLT<Mat> llt(k);
    for (int i = 0; i < n; ++i) {
      const auto [lo, hi] = kernel_window(f, f.tau(i), spec.h);
      const double vi = position(i);
      const double w0 = c0 + c2 * vi * vi * inv_h2;
      const double w1 = -2.0 * c2 * vi * inv_h2;
      const double w2 = c2 * inv_h2;
      Eigen::Map<Vec> gv(g.data(), k * k);
      gv = w0 * (zz_[0].col(hi) - zz_[0].col(lo)) + w1 * (zz_[1].col(hi) - zz_[1].col(lo)) +
           w2 * (zz_[2].col(hi) - zz_[2].col(lo));
      Eigen::Map<Vec> cv(c.data(), k * d);
      cv = w0 * (zy_[0].col(hi) - zy_[0].col(lo)) + w1 * (zy_[1].col(hi) - zy_[1].col(lo)) +
           w2 * (zy_[2].col(hi) - zy_[2].col(lo));
      llt.compute(g);
      if (llt.info() != Eigen::Success) {
        return infeasible(std::move(out), "singular local Gram matrix at tau=" + std::to_string(f.tau(i)));
      }
      const auto diag = llt.matrixLLT().diagonal();
      const double ratio = diag.maxCoeff() / diag.minCoeff();
      if (!(ratio * ratio <= kSingularCondition)) {
        return infeasible(std::move(out), "ill-conditioned local Gram matrix at tau=" + std::to_string(f.tau(i)));
      }
      const Mat b = llt.solve(c); // k x d
      const Vec zi = f.z.row(i).transpose();
      out.residual.row(i) = f.y.row(i) - zi.transpose() * b;
      out.leverage(i) = c0 * zi.dot(llt.solve(zi));
    }
    return out;
  }

private:
  double position(int row) const { return (frame_->t_index[static_cast<std::size_t>(row)] - centre_) / frame_->T; }

  static Pass infeasible(Pass p, std::string reason) {
    p.feasible = false;
    p.reason = std::move(reason);
    return p;
  }

  const RegressorFrame* frame_;
  double centre_ = 0.0;
  Mat zz_[3];
  Mat zy_[3];
};

} // namespace tvvar
