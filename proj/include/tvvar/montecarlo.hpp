#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tvvar/estimate.hpp"
#include "tvvar/parallel.hpp"
#include "tvvar/select.hpp"
#include "tvvar/simulate.hpp"

namespace tvvar {

struct McOptions {
  double alpha = 0.05;
  bool exclude_boundary = false; ///< drop grid points in [0,h) and (1-h,1] from the metrics
  LagSelectOptions selection;
  SimulateOptions simulation;
};

/// Summary of one sample size.
struct McCell {
  int T = 0;
  int replications = 0; ///< successful
  int failed = 0;
  std::vector<std::string> failure_messages;
  double freq_under = 0.0;
  double freq_equal = 0.0;
  double freq_over = 0.0;
  double rmse_A = 0.0;
  double rmse_Omega = 0.0;
  double coverage_A = 0.0;
  double coverage_Omega = 0.0;
  double mean_bandwidth = 0.0;
  std::uint64_t stream_base = 0;
};

struct McReport {
  std::string path;
  int true_p = 0;
  int n_reps = 0;
  std::uint64_t seed = 0;
  double alpha = 0.05;
  std::vector<McCell> cells;
  double wall_clock_seconds = 0.0;
};

/// Per-replication statistics; summed in replication order.
struct McReplication {
  bool ok = false;
  std::string error;
  int p_hat = 0;
  double h = 0.0;
  double sq_err_A = 0.0;
  double sq_err_Omega = 0.0;
  long points = 0;
  long covered_A = 0;
  long total_A = 0;
  long covered_Omega = 0;
  long total_Omega = 0;
};

/// Simulate, select (p, h), fit, and score one replication against the true
/// path. Coefficients beyond the true lag order have true value zero; true
/// coefficients missing from an underfitted model count as estimated by zero
/// in the RMSE and are left out of the coverage average.
inline McReplication run_replication(const CoefficientPath& path, int T, std::uint64_t seed, std::uint64_t stream,
                                     const McOptions& opt) {
  McReplication rep;
  try {
    const SeriesMatrix x = simulate_tvvar(path, T, seed, opt.simulation, stream);
    const IcTrace sel = select_lag(x, opt.selection);
    rep.p_hat = sel.p_hat;
    rep.h = sel.h_hat;
    const TvVarFit fit = fit_tvvar(x, sel.p_hat, sel.h_hat, {}, opt.selection.family);
    const int d = path.d();
    const int p_true = path.p();
    const int p_max = std::max(p_true, rep.p_hat);
    const int m = d * (d + 1) / 2;
    for (std::size_t i = 0; i < fit.grid.size(); ++i) {
      const double tau = fit.grid[i];
      if (opt.exclude_boundary && (tau < fit.h() || tau > 1.0 - fit.h())) continue;
      const VarCoefficients truth = path(tau);
      Mat a_true = Mat::Zero(d, 1 + d * p_max);
      a_true.leftCols(1 + d * p_true) = truth.stacked();
      Mat a_est = Mat::Zero(d, 1 + d * p_max);
      a_est.leftCols(fit.k()) = fit.A_hat[i];
      const Mat omega_true = truth.Omega();
      rep.sq_err_A += (a_est - a_true).squaredNorm();
      rep.sq_err_Omega += (fit.Omega_hat[i] - omega_true).squaredNorm();
      ++rep.points;

      const PointwiseCi ci = pointwise_ci_at(fit, i, opt.alpha);
      const Vec va = vec(a_true.leftCols(fit.k()));
      for (Eigen::Index e = 0; e < va.size(); ++e) {
        ++rep.total_A;
        if (ci.lower(e) <= va(e) && va(e) <= ci.upper(e)) ++rep.covered_A;
      }
      const Vec vo = vech(omega_true);
      for (int e = 0; e < m; ++e) {
        const Eigen::Index idx = va.size() + e;
        ++rep.total_Omega;
        if (ci.lower(idx) <= vo(e) && vo(e) <= ci.upper(idx)) ++rep.covered_Omega;
      }
    }
    rep.ok = true;
  } catch (const Error& e) {
    rep.error = e.what();
  }
  return rep;
}

inline McCell summarize(int T, int true_p, const std::vector<McReplication>& reps) {
  McCell cell;
  cell.T = T;
  double sa = 0, so = 0, h = 0;
  long pts = 0, ca = 0, ta = 0, co = 0, to = 0;
  int under = 0, equal = 0, over = 0;
  for (const auto& r : reps) {
    if (!r.ok) {
      ++cell.failed;
      cell.failure_messages.push_back(r.error);
      continue;
    }
    ++cell.replications;
    under += r.p_hat < true_p;
    equal += r.p_hat == true_p;
    over += r.p_hat > true_p;
    sa += r.sq_err_A;
    so += r.sq_err_Omega;
    pts += r.points;
    ca += r.covered_A;
    ta += r.total_A;
    co += r.covered_Omega;
    to += r.total_Omega;
    h += r.h;
  }
  if (cell.replications > 0) {
    const double n = cell.replications;
    cell.freq_under = under / n;
    cell.freq_equal = equal / n;
    cell.freq_over = over / n;
    cell.mean_bandwidth = h / n;
  }
  if (pts > 0) {
    cell.rmse_A = std::sqrt(sa / static_cast<double>(pts));
    cell.rmse_Omega = std::sqrt(so / static_cast<double>(pts));
  }
  if (ta > 0) cell.coverage_A = static_cast<double>(ca) / static_cast<double>(ta);
  if (to > 0) cell.coverage_Omega = static_cast<double>(co) / static_cast<double>(to);
  return cell;
}

/// Replication r of sample size index k uses stream k * 2^32 + r.
inline McReport run_monte_carlo(const CoefficientPath& path, const std::vector<int>& T_list, int n_reps,
                                std::uint64_t seed, const McOptions& opt = {}) {
  if (n_reps < 1) throw ConfigError("montecarlo: need at least one replication");
  const auto start = std::chrono::steady_clock::now();
  McReport report;
  report.path = path.name();
  report.true_p = path.p();
  report.n_reps = n_reps;
  report.seed = seed;
  report.alpha = opt.alpha;
  for (std::size_t k = 0; k < T_list.size(); ++k) {
    const int T = T_list[k];
    const std::uint64_t base = static_cast<std::uint64_t>(k) << 32;
    std::vector<McReplication> reps(static_cast<std::size_t>(n_reps));
    parallel_for(reps.size(), [&](std::size_t r) { reps[r] = run_replication(path, T, seed, base + r, opt); });
    McCell cell = summarize(T, path.p(), reps);
    cell.stream_base = base;
    report.cells.push_back(std::move(cell));
  }
  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

} // namespace tvvar
