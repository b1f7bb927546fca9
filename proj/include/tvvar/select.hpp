#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "tvvar/error.hpp"
#include "tvvar/kernel.hpp"
#include "tvvar/regressors.hpp"
#include "tvvar/series.hpp"
#include "tvvar/stats.hpp"

namespace tvvar {

/// chi_T = max{h^3, h sqrt(log T/(T h)), log T/(T h)} * log(1/h).
inline double ic_penalty(int T, double h) {
  if (!(h > 0.0) || !(h < 1.0)) {
    throw ConfigError("invalid penalty: requires 0 < h < 1 so that log(1/h) > 0 (h=" + std::to_string(h) + ")");
  }
  const double th = T * h;
  if (!(th > 1.0)) throw ConfigError("invalid penalty: requires T*h > 1");
  const double r = std::log(static_cast<double>(T)) / th;
  return std::max({h * h * h, h * std::sqrt(r), r}) * std::log(1.0 / h);
}

inline std::vector<double> default_cv_grid() { return log_grid(0.06, 0.9, 15); }

inline int default_max_lag(int T, double h_pilot = 0.3) {
  return std::max(1, static_cast<int>(std::floor(std::sqrt(T * h_pilot))));
}

struct CvTrace {
  int p = 0;
  std::vector<double> bandwidths;
  std::vector<double> cv;               ///< NaN where infeasible
  std::vector<std::string> infeasible;  ///< reason per candidate, empty when feasible
  double h_cv = std::numeric_limits<double>::quiet_NaN();
  std::size_t best = 0;
};

/// Leave-one-out CV over a bandwidth grid for a fixed frame. Ties go to the
/// smaller bandwidth.
inline CvTrace cv_bandwidth(const RegressorFrame& frame, std::vector<double> h_grid,
                            KernelFamily family = KernelFamily::Epanechnikov) {
  if (h_grid.empty()) throw ConfigError("cv_bandwidth: empty bandwidth grid");
  std::sort(h_grid.begin(), h_grid.end());
  CvTrace trace;
  trace.p = frame.p;
  trace.bandwidths = h_grid;
  trace.cv.assign(h_grid.size(), std::numeric_limits<double>::quiet_NaN());
  trace.infeasible.assign(h_grid.size(), std::string{});
  const LocalMomentPrefix prefix(frame);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < h_grid.size(); ++i) {
    const KernelSpec spec{family, h_grid[i]};
    const auto pass = prefix.evaluate(spec);
    if (!pass.feasible) {
      trace.infeasible[i] = pass.reason;
      continue;
    }
    double total = 0.0;
    bool ok = true;
    for (int r = 0; r < frame.n(); ++r) {
      const double denom = 1.0 - pass.leverage(r);
      if (!(denom > 1e-10)) {
        trace.infeasible[i] = "leave-one-out fit singular at tau=" + std::to_string(frame.tau(r));
        ok = false;
        break;
      }
      total += pass.residual.row(r).squaredNorm() / (denom * denom);
    }
    if (!ok || !std::isfinite(total)) {
      if (trace.infeasible[i].empty()) trace.infeasible[i] = "non-finite CV value";
      continue;
    }
    trace.cv[i] = total;
    if (total < best) {
      best = total;
      trace.best = i;
      trace.h_cv = h_grid[i];
    }
  }
  if (!std::isfinite(best)) {
    std::string why = "cv_bandwidth: no feasible bandwidth for p=" + std::to_string(frame.p);
    if (!trace.infeasible.empty()) why += " (largest candidate: " + trace.infeasible.back() + ")";
    throw NumericalError(why);
  }
  return trace;
}

inline CvTrace cv_bandwidth(const SeriesMatrix& x, int p, std::vector<double> h_grid,
                            KernelFamily family = KernelFamily::Epanechnikov) {
  return cv_bandwidth(build_regressors(x, p), std::move(h_grid), family);
}

/// (1/T) sum_t eta_t^T eta_t from in-sample local fits at bandwidth h.
inline double local_rss(const RegressorFrame& frame, const KernelSpec& spec) {
  const auto pass = LocalMomentPrefix(frame).evaluate(spec);
  if (!pass.feasible) throw NumericalError("local_rss: " + pass.reason);
  return pass.residual.squaredNorm() / frame.T;
}

struct LagSelectOptions {
  int max_lag = 0;                     ///< 0 = default_max_lag(T)
  std::vector<double> h_grid;          ///< empty = default_cv_grid()
  std::optional<double> fixed_bandwidth;
  KernelFamily family = KernelFamily::Epanechnikov;
};

struct IcTrace {
  std::vector<int> lags;
  std::vector<double> bandwidth;
  std::vector<double> rss;
  std::vector<double> penalty;
  std::vector<double> ic;
  std::vector<CvTrace> cv;             ///< per candidate when bandwidths are cross-validated
  std::vector<std::pair<int, std::string>> failures;
  int first_target = 0;                ///< common estimation sample starts here
  int p_hat = 0;
  double h_hat = std::numeric_limits<double>::quiet_NaN();
};

/// IC(p) = log RSS(p) + p * chi_T over p = 1..P, all candidates fitted on the
/// common sample t = P+1..T. Each candidate is fitted at its own CV bandwidth;
/// chi_T is one number shared by all candidates, evaluated at the bandwidth
/// of the smallest candidate that could be fitted.
inline IcTrace select_lag(const SeriesMatrix& x, LagSelectOptions opt = {}) {
  const int T = x.T();
  const int P = opt.max_lag > 0 ? opt.max_lag : default_max_lag(T);
  if (opt.h_grid.empty()) opt.h_grid = default_cv_grid();
  IcTrace trace;
  trace.first_target = P + 1;
  for (int p = 1; p <= P; ++p) {
    try {
      const RegressorFrame frame = build_regressors(x, p, P + 1);
      double h;
      if (opt.fixed_bandwidth) {
        h = *opt.fixed_bandwidth;
      } else {
        trace.cv.push_back(cv_bandwidth(frame, opt.h_grid, opt.family));
        h = trace.cv.back().h_cv;
      }
      const double rss = std::max(local_rss(frame, KernelSpec{opt.family, h}), 1e-300);
      trace.lags.push_back(p);
      trace.bandwidth.push_back(h);
      trace.rss.push_back(rss);
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      trace.failures.emplace_back(p, e.what());
    }
  }
  if (trace.lags.empty()) throw NumericalError("select_lag: every candidate lag order failed");
  const double pen = ic_penalty(T, trace.bandwidth.front());
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < trace.lags.size(); ++i) {
    const double ic = std::log(trace.rss[i]) + trace.lags[i] * pen;
    trace.penalty.push_back(pen);
    trace.ic.push_back(ic);
    if (ic < best) {
      best = ic;
      trace.p_hat = trace.lags[i];
      trace.h_hat = trace.bandwidth[i];
    }
  }
  return trace;
}

} // namespace tvvar
