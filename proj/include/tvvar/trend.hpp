#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "tvvar/algebra.hpp"
#include "tvvar/error.hpp"
#include "tvvar/kernel.hpp"
#include "tvvar/parallel.hpp"
#include "tvvar/rng.hpp"
#include "tvvar/series.hpp"
#include "tvvar/stats.hpp"

namespace tvvar {

/// Normalized Nadaraya-Watson weights of every grid point over t = 1..T.
/// The weights depend only on (T, h, grid), so one smoother serves the
/// original fit and every bootstrap replication.
class TrendSmoother {
public:
  TrendSmoother(int T, std::vector<double> grid, const KernelSpec& spec) : T_(T), grid_(std::move(grid)) {
    spec.validate();
    rows_.reserve(grid_.size());
    for (double tau : grid_) {
      Row row;
      const double reach = spec.h * T * (1.0 + 1e-12);
      row.first = std::max(1, static_cast<int>(std::ceil(tau * T - reach)));
      const int last = std::min(T, static_cast<int>(std::floor(tau * T + reach)));
      double sum = 0.0;
      for (int t = row.first; t <= last; ++t) {
        const double w = kernel_eval((static_cast<double>(t) / T - tau) / spec.h, spec.family);
        row.w.push_back(w);
        sum += w;
      }
      if (!(sum > 0.0)) throw BandwidthTooSmall(tau, spec.h);
      for (double& w : row.w) w /= sum;
      rows_.push_back(std::move(row));
    }
  }

  int T() const { return T_; }
  const std::vector<double>& grid() const { return grid_; }

  /// grid x d smoothed values of a T x d panel.
  Mat apply(const Mat& x) const {
    Mat out = Mat::Zero(static_cast<Eigen::Index>(rows_.size()), x.cols());
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      const Row& row = rows_[i];
      for (std::size_t s = 0; s < row.w.size(); ++s) {
        out.row(static_cast<Eigen::Index>(i)) += row.w[s] * x.row(row.first - 1 + static_cast<int>(s));
      }
    }
    return out;
  }

private:
  struct Row {
    int first = 1;
    std::vector<double> w;
  };
  int T_;
  std::vector<double> grid_;
  std::vector<Row> rows_;
};

struct TrendFit {
  std::vector<double> grid;
  Mat mu_hat;    ///< grid x d
  double h = 0.0;
  Mat residuals; ///< T x d, x_t - mu_hat(tau_t)
};

/// Local-constant trend. Empty grid means {tau_t : t = 1..T}.
inline TrendFit estimate_trend(const SeriesMatrix& x, double h, std::vector<double> grid = {},
                               KernelFamily family = KernelFamily::Epanechnikov) {
  const KernelSpec spec{family, h};
  if (grid.empty()) grid = time_grid(x.T());
  TrendFit fit;
  fit.h = h;
  fit.grid = grid;
  fit.mu_hat = TrendSmoother(x.T(), grid, spec).apply(x.values);
  fit.residuals = x.values - TrendSmoother(x.T(), time_grid(x.T()), spec).apply(x.values);
  return fit;
}

struct McvTrace {
  int k = 0;
  std::vector<double> bandwidths;
  std::vector<double> objective; ///< NaN where infeasible
  double h_mcv = std::numeric_limits<double>::quiet_NaN();
};

inline int default_mcv_k(int T, double h_pilot = 0.1) { return static_cast<int>(std::ceil(T * h_pilot)); }

inline std::vector<double> default_mcv_grid(int T) {
  return log_grid(5.0 * std::pow(static_cast<double>(T), -0.9), 0.5, 20);
}

/// Leave-(2k+1)-out cross-validation: the fit at tau_t ignores every s with |s - t| <= k.
inline McvTrace mcv_bandwidth(const SeriesMatrix& x, int k, std::vector<double> h_grid,
                              KernelFamily family = KernelFamily::Epanechnikov) {
  if (k < 0) throw ConfigError("mcv_bandwidth: k must be >= 0");
  if (h_grid.empty()) throw ConfigError("mcv_bandwidth: empty bandwidth grid");
  std::sort(h_grid.begin(), h_grid.end());
  const int T = x.T(), d = x.d();
  McvTrace trace;
  trace.k = k;
  trace.bandwidths = h_grid;
  trace.objective.assign(h_grid.size(), std::numeric_limits<double>::quiet_NaN());
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < h_grid.size(); ++i) {
    const double h = h_grid[i];
    double total = 0.0;
    bool feasible = true;
    Vec acc(d);
    for (int t = 1; t <= T && feasible; ++t) {
      acc.setZero();
      double wsum = 0.0;
      const int reach = static_cast<int>(std::floor(h * T * (1.0 + 1e-12)));
      for (int s = std::max(1, t - reach); s <= std::min(T, t + reach); ++s) {
        if (std::abs(s - t) <= k) continue;
        const double w = kernel_eval(static_cast<double>(s - t) / (T * h), family);
        if (w <= 0.0) continue;
        acc += w * x.obs(s);
        wsum += w;
      }
      if (!(wsum > 0.0)) {
        feasible = false;
        break;
      }
      total += (x.obs(t) - acc / wsum).squaredNorm();
    }
    if (!feasible) continue;
    trace.objective[i] = total;
    if (total < best) {
      best = total;
      trace.h_mcv = h;
    }
  }
  if (!std::isfinite(best)) {
    const double smallest = (k + 1.0) / T;
    throw NumericalError("mcv_bandwidth: every candidate leaves an empty window after deleting |s-t|<=" +
                         std::to_string(k) + "; the smallest feasible bandwidth exceeds " + std::to_string(smallest));
  }
  return trace;
}

enum class DependenceKernel { Bartlett };

inline double dependence_kernel(double u, DependenceKernel kind) {
  switch (kind) {
  case DependenceKernel::Bartlett: return std::abs(u) <= 1.0 ? 1.0 - std::abs(u) : 0.0;
  }
  return 0.0;
}

struct DwbConfig {
  int block_length = 0; ///< l; 0 = floor(T^{1/3})
  int replications = 499;
  DependenceKernel kernel = DependenceKernel::Bartlett;
  double c0 = 2.0;
  std::uint64_t seed = 20240601;

  int resolved_block_length(int T) const {
    return block_length > 0 ? block_length : std::max(1, static_cast<int>(std::floor(std::cbrt(static_cast<double>(T)))));
  }
  void validate(int T) const {
    const int l = resolved_block_length(T);
    if (l >= T) throw ConfigError("bootstrap block length must be smaller than T");
    if (replications < 99) throw ConfigError("bootstrap needs at least 99 replications");
    if (!(c0 > 0.0)) throw ConfigError("oversmoothing constant must be positive");
  }
};

/// Generator of zero-mean, unit-variance Gaussian sequences with
/// corr(xi_t, xi_s) = a((t-s)/l). The banded Toeplitz correlation is
/// Cholesky-factorized once; if that fails the dense eigenvalue-clipped square
/// root is used instead and `fallback()` reports it.
class DependentMultiplier {
public:
  DependentMultiplier(int T, int l, DependenceKernel kind) : T_(T) {
    std::vector<double> r;
    for (int k = 0;; ++k) {
      const double v = dependence_kernel(static_cast<double>(k) / l, kind);
      if (v == 0.0 || k >= T) break;
      r.push_back(v);
    }
    band_ = static_cast<int>(r.size()) - 1;
    if (!banded_cholesky(r)) dense_fallback(r);
  }

  bool fallback() const { return fallback_; }

  Vec draw(std::mt19937_64& rng) const {
    std::normal_distribution<double> normal;
    Vec g(T_);
    for (int t = 0; t < T_; ++t) g(t) = normal(rng);
    if (fallback_) return root_ * g;
    Vec xi = Vec::Zero(T_);
    for (int i = 0; i < T_; ++i) {
      double acc = 0.0;
      for (int j = std::max(0, i - band_); j <= i; ++j) acc += lower(i, j) * g(j);
      xi(i) = acc;
    }
    return xi;
  }

private:
  double& lower(int i, int j) { return band_l_[static_cast<std::size_t>(i) * (band_ + 1) + (i - j)]; }
  double lower(int i, int j) const { return band_l_[static_cast<std::size_t>(i) * (band_ + 1) + (i - j)]; }

  bool banded_cholesky(const std::vector<double>& r) {
    band_l_.assign(static_cast<std::size_t>(T_) * (band_ + 1), 0.0);
    for (int i = 0; i < T_; ++i) {
      for (int j = std::max(0, i - band_); j <= i; ++j) {
        double acc = r[static_cast<std::size_t>(i - j)];
        for (int m = std::max(0, i - band_); m < j; ++m) acc -= lower(i, m) * lower(j, m);
        if (i == j) {
          if (!(acc > 1e-12)) return false;
          lower(i, i) = std::sqrt(acc);
        } else {
          lower(i, j) = acc / lower(j, j);
        }
      }
    }
    return true;
  }

  void dense_fallback(const std::vector<double>& r) {
    Mat c = Mat::Zero(T_, T_);
    for (int i = 0; i < T_; ++i) {
      for (int j = 0; j < T_; ++j) {
        const auto lag = static_cast<std::size_t>(std::abs(i - j));
        c(i, j) = lag < r.size() ? r[lag] : 0.0;
      }
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(c);
    const Vec ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    root_ = es.eigenvectors() * ev.asDiagonal();
    fallback_ = true;
  }

  int T_;
  int band_ = 0;
  std::vector<double> band_l_;
  Mat root_;
  bool fallback_ = false;
};

struct BootstrapBand {
  std::vector<double> grid;
  double alpha = 0.05;
  double h = 0.0;
  double h_tilde = 0.0; ///< oversmoothed pilot bandwidth
  int block_length = 0;
  int replications = 0;
  Mat mu_hat; ///< grid x d
  Mat lower;
  Mat upper;
  bool factorization_fallback = false;
  int swapped = 0; ///< endpoints swapped because lower > upper
  int clipped = 0; ///< endpoints moved to contain the point estimate
};

/// Band from bootstrap deviations. `deviations[j]` is the grid x d matrix
/// mu*_j(tau) - mu_tilde(tau) of replication j.
inline BootstrapBand band_from_draws(const Mat& mu_hat, const std::vector<Mat>& deviations, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0,1)");
  if (deviations.empty()) throw ConfigError("band_from_draws: no replications");
  BootstrapBand band;
  band.alpha = alpha;
  band.mu_hat = mu_hat;
  band.lower.resize(mu_hat.rows(), mu_hat.cols());
  band.upper.resize(mu_hat.rows(), mu_hat.cols());
  std::vector<double> sample(deviations.size());
  for (Eigen::Index i = 0; i < mu_hat.rows(); ++i) {
    for (Eigen::Index c = 0; c < mu_hat.cols(); ++c) {
      for (std::size_t j = 0; j < deviations.size(); ++j) sample[j] = deviations[j](i, c);
      std::sort(sample.begin(), sample.end());
      double lo = mu_hat(i, c) - quantile_sorted(sample, 1.0 - alpha / 2.0);
      double hi = mu_hat(i, c) - quantile_sorted(sample, alpha / 2.0);
      if (lo > hi) {
        std::swap(lo, hi);
        ++band.swapped;
      }
      if (lo > mu_hat(i, c) || hi < mu_hat(i, c)) {
        lo = std::min(lo, mu_hat(i, c));
        hi = std::max(hi, mu_hat(i, c));
        ++band.clipped;
      }
      band.lower(i, c) = lo;
      band.upper(i, c) = hi;
    }
  }
  return band;
}

/// Dependent wild bootstrap band for the trend estimated at bandwidth h. The
/// pilot uses h_tilde = c0 * h^{5/9}, so passing the MCV bandwidth as h gives
/// the standard oversmoothing rule.
inline BootstrapBand dwb_bands(const SeriesMatrix& x, double h, const DwbConfig& cfg, double alpha,
                               std::vector<double> grid = {}, KernelFamily family = KernelFamily::Epanechnikov) {
  const int T = x.T();
  cfg.validate(T);
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0,1)");
  if (grid.empty()) grid = time_grid(T);
  const double h_tilde = cfg.c0 * std::pow(h, 5.0 / 9.0);
  const int l = cfg.resolved_block_length(T);

  const TrendSmoother pilot_all(T, time_grid(T), KernelSpec{family, h_tilde});
  const TrendSmoother pilot_grid(T, grid, KernelSpec{family, h_tilde});
  const TrendSmoother smoother(T, grid, KernelSpec{family, h});
  const Mat mu_tilde = pilot_all.apply(x.values);
  const Mat mu_tilde_grid = pilot_grid.apply(x.values);
  const Mat resid = x.values - mu_tilde;
  const Mat mu_hat = smoother.apply(x.values);

  const DependentMultiplier multiplier(T, l, cfg.kernel);
  std::vector<Mat> deviations(static_cast<std::size_t>(cfg.replications));
  parallel_for(deviations.size(), [&](std::size_t j) {
    auto rng = stream_engine(cfg.seed, j);
    const Vec xi = multiplier.draw(rng);
    const Mat xstar = mu_tilde + xi.asDiagonal() * resid;
    deviations[j] = smoother.apply(xstar) - mu_tilde_grid;
  });

  BootstrapBand band = band_from_draws(mu_hat, deviations, alpha);
  band.grid = std::move(grid);
  band.h = h;
  band.h_tilde = h_tilde;
  band.block_length = l;
  band.replications = cfg.replications;
  band.factorization_fallback = multiplier.fallback();
  return band;
}

} // namespace tvvar
