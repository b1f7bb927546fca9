#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "tvvar/error.hpp"
#include "tvvar/kernel.hpp"
#include "tvvar/parallel.hpp"
#include "tvvar/regressors.hpp"
#include "tvvar/select.hpp"
#include "tvvar/series.hpp"

namespace tvvar {

/// OLS VAR(p) with intercept, d x (1+dp) as [a, A_1, ..., A_p].
inline Mat fit_constant_var(const RegressorFrame& f) {
  Eigen::HouseholderQR<Mat> qr(f.z);
  const Mat r = qr.matrixQR().topRows(f.k()).triangularView<Eigen::Upper>();
  const Vec sv = Eigen::JacobiSVD<Mat>(r).singularValues();
  const double smin = sv(sv.size() - 1);
  const double cond = smin > 0.0 ? (sv(0) / smin) * (sv(0) / smin) : std::numeric_limits<double>::infinity();
  if (!(cond <= kSingularCondition)) throw SingularDesign(1.0, cond);
  return qr.solve(f.y).transpose();
}

inline Mat fit_constant_var(const SeriesMatrix& x, int p) {
  if (p < 1) throw ConfigError("fit_constant_var: lag order must be >= 1");
  return fit_constant_var(build_regressors(x, p));
}

struct ForecastTask {
  std::vector<int> horizons{1, 2, 4, 8};
  int first_origin = 0;  ///< number of observations at the first origin; 0 = ceil(0.6 T)
  int tv_lag = 3;
  int cvar_lag = 3;
  std::optional<double> bandwidth;  ///< fixed TV bandwidth; unset = CV
  int reselect_every = 8;           ///< CV refresh interval in origins
  std::vector<double> h_grid;       ///< empty = default_cv_grid()
  KernelFamily family = KernelFamily::Epanechnikov;
  bool iterated = false;            ///< iterate the one-step VAR instead of reusing A z_t

  int resolved_first_origin(int T) const {
    return first_origin > 0 ? first_origin : static_cast<int>(std::ceil(0.6 * T));
  }

  void validate(int T, int d) const {
    if (horizons.empty()) throw ConfigError("forecast: no horizons");
    int hmax = 0;
    for (int h : horizons) {
      if (h < 1) throw ConfigError("forecast: horizons must be >= 1");
      hmax = std::max(hmax, h);
    }
    if (tv_lag < 1 || cvar_lag < 1) throw ConfigError("forecast: lag orders must be >= 1");
    if (reselect_every < 1) throw ConfigError("forecast: reselect interval must be >= 1");
    if (bandwidth && !(*bandwidth > 0.0)) throw ConfigError("forecast: bandwidth must be positive");
    const int origin = resolved_first_origin(T);
    const int min_sample = std::max(tv_lag, cvar_lag) + 1 + d * std::max(tv_lag, cvar_lag) + 1;
    if (origin < min_sample) {
      throw ConfigError("forecast: first origin " + std::to_string(origin) + " is below the minimum estimation sample " +
                        std::to_string(min_sample));
    }
    if (origin + hmax > T) {
      throw DataError("forecast: no observations after origin " + std::to_string(origin) + " for horizon " +
                      std::to_string(hmax));
    }
  }
};

/// RMSE by method, horizon and series. Method 0 is the benchmark.
struct RmseTable {
  std::vector<std::string> series;
  std::vector<int> horizons;
  std::vector<std::string> methods{"CVAR", "TVVAR"};
  std::vector<std::vector<std::vector<double>>> rmse;   ///< [method][horizon][series]
  std::vector<std::vector<std::vector<double>>> ratio;  ///< rmse / benchmark rmse
  std::vector<int> evaluated;                          ///< origins used per horizon
  std::vector<std::pair<int, std::string>> skipped;    ///< origin, reason
  std::vector<std::pair<int, double>> bandwidths;      ///< origin at which h was (re)selected
};

namespace detail {

/// Average of the next h forecasts; `iterated` = false reuses the one-step
/// projection for every h.
inline Vec average_forecast(const Mat& coef, const SeriesMatrix& x, int t, int p, int h, bool iterated) {
  const int d = x.d();
  std::vector<Vec> hist;  // hist[j] = x_{t-j}
  for (int j = 0; j < p; ++j) hist.push_back(x.obs(t - j));
  auto step = [&] {
    Vec f = coef.col(0);
    for (int j = 0; j < p; ++j) f += coef.block(0, 1 + j * d, d, d) * hist[static_cast<std::size_t>(j)];
    return f;
  };
  if (!iterated) return step();
  Vec sum = Vec::Zero(d);
  for (int i = 0; i < h; ++i) {
    Vec f = step();
    sum += f;
    hist.insert(hist.begin(), f);
    hist.pop_back();
  }
  return sum / h;
}

} // namespace detail

/// Expanding-window evaluation. At origin t both models are estimated on
/// x_1..x_t, the TV model evaluated at tau = 1, and scored against
/// h^{-1}(x_{t+1} + ... + x_{t+h}).
inline RmseTable expanding_forecast(const SeriesMatrix& x, const ForecastTask& task) {
  const int T = x.T(), d = x.d();
  task.validate(T, d);
  const int first = task.resolved_first_origin(T);
  const int last = T - 1;  // later origins contribute to short horizons only
  const int n_origins = last - first + 1;
  const std::vector<double> grid = task.h_grid.empty() ? default_cv_grid() : task.h_grid;

  std::vector<double> h_at(static_cast<std::size_t>(n_origins), std::numeric_limits<double>::quiet_NaN());
  RmseTable table;
  if (task.bandwidth) {
    std::fill(h_at.begin(), h_at.end(), *task.bandwidth);
  } else {
    const int n_sel = (n_origins + task.reselect_every - 1) / task.reselect_every;
    std::vector<double> chosen(static_cast<std::size_t>(n_sel), std::numeric_limits<double>::quiet_NaN());
    parallel_for(chosen.size(), [&](std::size_t s) {
      const int t = first + static_cast<int>(s) * task.reselect_every;
      try {
        chosen[s] = cv_bandwidth(build_regressors(x.head(t), task.tv_lag), grid, task.family).h_cv;
      } catch (const Error&) {
      }
    });
    for (int i = 0; i < n_origins; ++i) h_at[static_cast<std::size_t>(i)] = chosen[static_cast<std::size_t>(i / task.reselect_every)];
    for (std::size_t s = 0; s < chosen.size(); ++s) {
      table.bandwidths.emplace_back(first + static_cast<int>(s) * task.reselect_every, chosen[s]);
    }
  }

  struct OriginResult {
    bool ok = false;
    std::string error;
    std::vector<Vec> err_cvar, err_tv;  // per horizon index; empty Vec when t + h > T
  };
  std::vector<OriginResult> results(static_cast<std::size_t>(n_origins));
  const auto nh = task.horizons.size();
  parallel_for(results.size(), [&](std::size_t i) {
    const int t = first + static_cast<int>(i);
    OriginResult& out = results[i];
    try {
      const SeriesMatrix past = x.head(t);
      const Mat b_cvar = fit_constant_var(build_regressors(past, task.cvar_lag));
      const double h = h_at[i];
      if (!std::isfinite(h)) throw NumericalError("no feasible bandwidth at origin");
      const Mat b_tv = local_coefficients(build_regressors(past, task.tv_lag), 1.0, KernelSpec{task.family, h}).coef;
      out.err_cvar.resize(nh);
      out.err_tv.resize(nh);
      for (std::size_t k = 0; k < nh; ++k) {
        const int hz = task.horizons[k];
        if (t + hz > T) continue;
        Vec target = Vec::Zero(d);
        for (int s = 1; s <= hz; ++s) target += x.obs(t + s);
        target /= hz;
        out.err_cvar[k] = detail::average_forecast(b_cvar, x, t, task.cvar_lag, hz, task.iterated) - target;
        out.err_tv[k] = detail::average_forecast(b_tv, x, t, task.tv_lag, hz, task.iterated) - target;
      }
      out.ok = true;
    } catch (const Error& e) {
      out.error = e.what();
    }
  });

  table.series = x.names;
  table.horizons = task.horizons;
  table.evaluated.assign(nh, 0);
  std::vector<std::vector<Vec>> sse(2, std::vector<Vec>(nh, Vec::Zero(d)));
  for (std::size_t i = 0; i < results.size(); ++i) {
    const OriginResult& r = results[i];
    if (!r.ok) {
      table.skipped.emplace_back(first + static_cast<int>(i), r.error);
      continue;
    }
    for (std::size_t k = 0; k < nh; ++k) {
      if (r.err_cvar[k].size() == 0) continue;
      ++table.evaluated[k];
      sse[0][k] += r.err_cvar[k].cwiseAbs2();
      sse[1][k] += r.err_tv[k].cwiseAbs2();
    }
  }
  table.rmse.assign(2, std::vector<std::vector<double>>(nh, std::vector<double>(static_cast<std::size_t>(d), 0.0)));
  table.ratio = table.rmse;
  for (std::size_t k = 0; k < nh; ++k) {
    if (table.evaluated[k] == 0) throw NumericalError("forecast: every origin failed for horizon " + std::to_string(task.horizons[k]));
    for (int j = 0; j < d; ++j) {
      const auto js = static_cast<std::size_t>(j);
      for (std::size_t m = 0; m < 2; ++m) table.rmse[m][k][js] = std::sqrt(sse[m][k](j) / table.evaluated[k]);
      table.ratio[0][k][js] = 1.0;
      table.ratio[1][k][js] = table.rmse[1][k][js] / table.rmse[0][k][js];
    }
  }
  return table;
}

} // namespace tvvar
