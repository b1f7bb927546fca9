#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tvvar/estimate.hpp"
#include "tvvar/forecast.hpp"
#include "tvvar/io.hpp"
#include "tvvar/irf.hpp"
#include "tvvar/montecarlo.hpp"
#include "tvvar/parallel.hpp"
#include "tvvar/select.hpp"
#include "tvvar/simulate.hpp"
#include "tvvar/trend.hpp"
#include "tvvar/version.hpp"

namespace tvvar {

using json = nlohmann::json;

enum class Command { Select, Fit, Irf, Trend, Forecast, Simulate, MonteCarlo };

inline const std::map<std::string, Command>& command_names() {
  static const std::map<std::string, Command> names{
      {"select", Command::Select},     {"fit", Command::Fit},           {"irf", Command::Irf},
      {"trend", Command::Trend},       {"forecast", Command::Forecast}, {"simulate", Command::Simulate},
      {"montecarlo", Command::MonteCarlo}};
  return names;
}

inline std::string to_string(Command c) {
  for (const auto& [name, cmd] : command_names()) {
    if (cmd == c) return name;
  }
  return "?";
}

inline Command parse_command(const std::string& s) {
  const auto it = command_names().find(s);
  if (it == command_names().end()) throw ConfigError("unknown command '" + s + "'");
  return it->second;
}

/// Everything a run needs. Unset optionals mean "automatic" or "not given";
/// validate() rejects settings that do not belong to the command.
struct RunConfig {
  Command command = Command::Fit;
  std::string input;
  std::string out_dir = ".";
  std::optional<int> lag;
  std::optional<double> bandwidth;
  std::optional<int> max_lag;
  double alpha = 0.05;
  std::vector<double> taus;
  std::optional<int> grid_points;
  std::vector<int> horizons;
  std::optional<int> block_length;
  std::optional<int> boot_reps;
  std::optional<double> boot_c0;
  std::uint64_t seed = 1;
  int threads = 0;
  bool write_json = true;
  bool write_csv = true;
  std::string preset;
  std::string path_file;
  std::vector<int> sample_sizes;
  std::optional<int> reps;
  std::optional<int> first_origin;
  std::optional<int> cvar_lag;
  std::optional<int> reselect_every;
  bool iterated = false;
  bool exclude_boundary = false;
  bool timing = false;

  bool uses_input() const {
    return command != Command::Simulate && command != Command::MonteCarlo;
  }

  void validate() const {
    const std::string cmd = to_string(command);
    auto only = [&](bool given, const char* flag, std::initializer_list<Command> allowed) {
      if (!given) return;
      for (Command c : allowed) {
        if (c == command) return;
      }
      throw ConfigError(std::string(flag) + " is not valid for command '" + cmd + "'");
    };
    using C = Command;
    only(block_length.has_value(), "--block-length", {C::Trend});
    only(boot_reps.has_value(), "--boot-reps", {C::Trend});
    only(boot_c0.has_value(), "--boot-c0", {C::Trend});
    only(!preset.empty(), "--preset", {C::Simulate, C::MonteCarlo});
    only(!path_file.empty(), "--path-file", {C::Simulate});
    only(!sample_sizes.empty(), "--T", {C::Simulate, C::MonteCarlo});
    only(reps.has_value(), "--reps", {C::MonteCarlo});
    only(!taus.empty(), "--tau", {C::Fit, C::Irf, C::Trend});
    only(grid_points.has_value(), "--grid-points", {C::Fit, C::Irf, C::Trend});
    only(!horizons.empty(), "--horizons", {C::Irf, C::Forecast});
    only(first_origin.has_value(), "--first-origin", {C::Forecast});
    only(cvar_lag.has_value(), "--cvar-lag", {C::Forecast});
    only(reselect_every.has_value(), "--reselect-every", {C::Forecast});
    only(iterated, "--iterated", {C::Forecast});
    only(exclude_boundary, "--exclude-boundary", {C::MonteCarlo});
    only(timing, "--timing", {C::MonteCarlo});
    only(lag.has_value(), "--lag", {C::Fit, C::Irf, C::Trend, C::Forecast});
    only(max_lag.has_value(), "--max-lag", {C::Select, C::Fit, C::Irf, C::Trend, C::MonteCarlo});
    only(bandwidth.has_value(), "--bandwidth", {C::Select, C::Fit, C::Irf, C::Trend, C::Forecast});

    if (uses_input() && input.empty()) throw ConfigError("command '" + cmd + "' needs --input");
    if (!uses_input() && !input.empty()) throw ConfigError("command '" + cmd + "' does not read --input");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("--alpha must lie in (0,1)");
    if (threads < 0) throw ConfigError("--threads must be >= 0");
    if (!write_json && !write_csv) throw ConfigError("at least one output format is required");
    if (lag && *lag < 1) throw ConfigError("--lag must be >= 1");
    if (max_lag && *max_lag < 1) throw ConfigError("--max-lag must be >= 1");
    if (lag && max_lag) throw ConfigError("--lag and --max-lag are mutually exclusive");
    if (bandwidth && !(*bandwidth > 0.0)) throw ConfigError("--bandwidth must be positive");
    if (!taus.empty() && grid_points) throw ConfigError("--tau and --grid-points are mutually exclusive");
    for (double t : taus) {
      if (!(t >= 0.0 && t <= 1.0)) throw ConfigError("--tau values must lie in [0,1]");
    }
    if (grid_points && *grid_points < 2) throw ConfigError("--grid-points must be >= 2");
    for (int h : horizons) {
      if (h < 1) throw ConfigError("--horizons values must be >= 1");
    }
    if (command == C::Irf && horizons.size() > 1) throw ConfigError("irf takes a single --horizons count");
    if (block_length && *block_length < 1) throw ConfigError("--block-length must be >= 1");
    if (boot_reps && *boot_reps < 99) throw ConfigError("--boot-reps must be >= 99");
    if (boot_c0 && !(*boot_c0 > 0.0)) throw ConfigError("--boot-c0 must be positive");
    if (cvar_lag && *cvar_lag < 1) throw ConfigError("--cvar-lag must be >= 1");
    if (reselect_every && *reselect_every < 1) throw ConfigError("--reselect-every must be >= 1");
    if (first_origin && *first_origin < 1) throw ConfigError("--first-origin must be >= 1");
    if (command == C::Simulate) {
      if (preset.empty() == path_file.empty()) throw ConfigError("simulate needs exactly one of --preset or --path-file");
      if (sample_sizes.size() != 1) throw ConfigError("simulate needs a single --T");
    }
    if (command == C::MonteCarlo) {
      if (preset.empty()) throw ConfigError("montecarlo needs --preset");
      if (sample_sizes.empty()) throw ConfigError("montecarlo needs --T");
      if (!reps || *reps < 1) throw ConfigError("montecarlo needs --reps >= 1");
    }
    for (int T : sample_sizes) {
      if (T < 10) throw ConfigError("--T values must be >= 10");
    }
  }

  json to_json() const {
    json j;
    j["command"] = to_string(command);
    if (!input.empty()) j["input"] = input;
    j["out_dir"] = out_dir;
    j["lag"] = lag ? json(*lag) : json("auto");
    j["bandwidth"] = bandwidth ? json(*bandwidth) : json("auto");
    if (max_lag) j["max_lag"] = *max_lag;
    j["alpha"] = alpha;
    if (!taus.empty()) j["tau"] = taus;
    if (grid_points) j["grid_points"] = *grid_points;
    if (!horizons.empty()) j["horizons"] = horizons;
    if (block_length) j["block_length"] = *block_length;
    if (boot_reps) j["boot_reps"] = *boot_reps;
    if (boot_c0) j["boot_c0"] = *boot_c0;
    j["seed"] = seed;
    std::vector<std::string> fmt;
    if (write_json) fmt.push_back("json");
    if (write_csv) fmt.push_back("csv");
    j["formats"] = fmt;
    if (!preset.empty()) j["preset"] = preset;
    if (!path_file.empty()) j["path_file"] = path_file;
    if (!sample_sizes.empty()) j["T"] = sample_sizes;
    if (reps) j["reps"] = *reps;
    if (first_origin) j["first_origin"] = *first_origin;
    if (cvar_lag) j["cvar_lag"] = *cvar_lag;
    if (reselect_every) j["reselect_every"] = *reselect_every;
    if (iterated) j["iterated"] = true;
    if (exclude_boundary) j["exclude_boundary"] = true;
    return j;
  }
};

/// Files produced by a run, held in memory until the command succeeds.
class OutputBundle {
public:
  void add(std::string name, std::string content) { files_.emplace_back(std::move(name), std::move(content)); }
  const std::vector<std::pair<std::string, std::string>>& files() const { return files_; }

  /// Writes every file or none: anything already written is removed on failure.
  std::vector<std::string> commit(const std::string& dir) const {
    namespace fs = std::filesystem;
    std::vector<std::string> written;
    try {
      fs::create_directories(dir);
      for (const auto& [name, content] : files_) {
        const fs::path target = fs::path(dir) / name;
        const fs::path tmp = fs::path(dir) / (name + ".partial");
        {
          std::ofstream out(tmp, std::ios::binary);
          if (!out) throw DataError("cannot write '" + tmp.string() + "'");
          out << content;
          if (!out) throw DataError("write failed for '" + tmp.string() + "'");
        }
        written.push_back(tmp.string());
        fs::rename(tmp, target);
        written.back() = target.string();
      }
    } catch (const fs::filesystem_error& e) {
      for (const auto& p : written) {
        std::error_code ec;
        fs::remove(p, ec);
      }
      throw DataError(std::string("output: ") + e.what());
    } catch (...) {
      for (const auto& p : written) {
        std::error_code ec;
        fs::remove(p, ec);
      }
      throw;
    }
    return written;
  }

private:
  std::vector<std::pair<std::string, std::string>> files_;
};

namespace detail {

inline json mat_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

inline json vec_json(const Vec& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline std::vector<std::string> regressor_names(const std::vector<std::string>& series, int p) {
  std::vector<std::string> out{"const"};
  for (int j = 1; j <= p; ++j) {
    for (const auto& s : series) out.push_back(s + ".L" + std::to_string(j));
  }
  return out;
}

inline std::string num(double v) { return format_number(v); }

inline std::vector<double> resolve_grid(const RunConfig& cfg, std::vector<double> fallback) {
  if (!cfg.taus.empty()) return cfg.taus;
  if (cfg.grid_points) {
    std::vector<double> g;
    for (int i = 0; i < *cfg.grid_points; ++i) g.push_back(static_cast<double>(i) / (*cfg.grid_points - 1));
    return g;
  }
  return fallback;
}

struct Specification {
  int p = 0;
  double h = 0.0;
  std::optional<IcTrace> ic;
  std::optional<CvTrace> cv;
};

/// Lag by the information criterion unless fixed, then bandwidth by CV
/// unless fixed.
inline Specification specify(const SeriesMatrix& x, const RunConfig& cfg) {
  Specification s;
  if (cfg.lag) {
    s.p = *cfg.lag;
    if (cfg.bandwidth) {
      s.h = *cfg.bandwidth;
    } else {
      s.cv = cv_bandwidth(x, s.p, default_cv_grid());
      s.h = s.cv->h_cv;
    }
    return s;
  }
  LagSelectOptions opt;
  if (cfg.max_lag) opt.max_lag = *cfg.max_lag;
  opt.fixed_bandwidth = cfg.bandwidth;
  s.ic = select_lag(x, opt);
  s.p = s.ic->p_hat;
  if (cfg.bandwidth) {
    s.h = *cfg.bandwidth;
  } else {
    // re-run CV on the full sample for the chosen order
    s.cv = cv_bandwidth(x, s.p, default_cv_grid());
    s.h = s.cv->h_cv;
  }
  return s;
}

inline json cv_json(const CvTrace& cv) {
  json j;
  j["p"] = cv.p;
  j["bandwidths"] = cv.bandwidths;
  json vals = json::array();
  for (double v : cv.cv) vals.push_back(std::isfinite(v) ? json(v) : json(nullptr));
  j["cv"] = vals;
  j["infeasible"] = cv.infeasible;
  j["h_cv"] = cv.h_cv;
  return j;
}

inline json ic_json(const IcTrace& ic) {
  json j;
  j["lags"] = ic.lags;
  j["bandwidth"] = ic.bandwidth;
  j["rss"] = ic.rss;
  j["penalty"] = ic.penalty;
  j["ic"] = ic.ic;
  j["first_target"] = ic.first_target;
  j["p_hat"] = ic.p_hat;
  j["h_hat"] = ic.h_hat;
  json fails = json::array();
  for (const auto& [p, why] : ic.failures) fails.push_back({{"p", p}, {"reason", why}});
  j["failures"] = fails;
  json cvs = json::array();
  for (const auto& c : ic.cv) cvs.push_back(cv_json(c));
  j["cv"] = cvs;
  return j;
}

inline json spec_json(const Specification& s) {
  json j;
  j["p"] = s.p;
  j["h"] = s.h;
  j["lag_rule"] = s.ic ? "information-criterion" : "fixed";
  j["bandwidth_rule"] = s.cv ? "cross-validation" : "fixed";
  if (s.ic) j["ic"] = ic_json(*s.ic);
  if (s.cv) j["cv"] = cv_json(*s.cv);
  return j;
}

inline json series_json(const SeriesMatrix& x) {
  return json{{"T", x.T()}, {"d", x.d()}, {"names", x.names}};
}

inline void run_select(const RunConfig& cfg, const SeriesMatrix& x, json& result, OutputBundle& out) {
  LagSelectOptions opt;
  if (cfg.max_lag) opt.max_lag = *cfg.max_lag;
  opt.fixed_bandwidth = cfg.bandwidth;
  const IcTrace ic = select_lag(x, opt);
  result["selection"] = ic_json(ic);
  if (!cfg.write_csv) return;
  CsvWriter w({"p", "h", "rss", "penalty", "ic", "selected"});
  for (std::size_t i = 0; i < ic.lags.size(); ++i) {
    w.row({std::to_string(ic.lags[i]), num(ic.bandwidth[i]), num(ic.rss[i]), num(ic.penalty[i]), num(ic.ic[i]),
           ic.lags[i] == ic.p_hat ? "1" : "0"});
  }
  out.add("select_ic.csv", w.str());
  if (!ic.cv.empty()) {
    CsvWriter c({"p", "h", "cv", "infeasible"});
    for (const auto& tr : ic.cv) {
      for (std::size_t i = 0; i < tr.bandwidths.size(); ++i) {
        c.row({std::to_string(tr.p), num(tr.bandwidths[i]), num(tr.cv[i]), tr.infeasible[i]});
      }
    }
    out.add("select_cv.csv", c.str());
  }
}

inline void run_fit(const RunConfig& cfg, const SeriesMatrix& x, json& result, OutputBundle& out) {
  const Specification s = specify(x, cfg);
  const RegressorFrame frame = build_regressors(x, s.p);
  std::vector<double> own;
  for (int r = 0; r < frame.n(); ++r) own.push_back(frame.tau(r));
  const std::vector<double> grid = resolve_grid(cfg, own);
  const TvVarFit fit = fit_tvvar(frame, KernelSpec{KernelFamily::Epanechnikov, s.h}, grid);
  const int d = x.d();
  const auto reg = regressor_names(x.names, s.p);
  result["specification"] = spec_json(s);

  std::vector<std::optional<PointwiseCi>> cis(grid.size());
  std::vector<std::string> ci_error(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) {
    try {
      cis[i] = pointwise_ci_at(fit, i, cfg.alpha);
    } catch (const NumericalError& e) {
      ci_error[i] = e.what();
    }
  });

  json points = json::array();
  CsvWriter w({"tau", "block", "equation", "regressor", "estimate", "se", "lower", "upper"});
  const int kd = d * fit.k();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    json pt;
    pt["tau"] = grid[i];
    pt["A"] = mat_json(fit.A_hat[i]);
    pt["Omega"] = mat_json(fit.Omega_hat[i]);
    pt["omega_not_pd"] = static_cast<bool>(fit.omega_flagged[i]);
    const Vec est = [&] {
      Vec e(kd + d * (d + 1) / 2);
      e << vec(fit.A_hat[i]), vech(fit.Omega_hat[i]);
      return e;
    }();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const Vec se = cis[i] ? cis[i]->se : Vec::Constant(est.size(), nan);
    const Vec lo = cis[i] ? cis[i]->lower : Vec::Constant(est.size(), nan);
    const Vec hi = cis[i] ? cis[i]->upper : Vec::Constant(est.size(), nan);
    pt["se"] = vec_json(se);
    pt["lower"] = vec_json(lo);
    pt["upper"] = vec_json(hi);
    if (cis[i]) {
      pt["clipped_variances"] = cis[i]->clipped;
    } else {
      pt["ci_error"] = ci_error[i];
    }
    points.push_back(std::move(pt));
    for (Eigen::Index e = 0; e < est.size(); ++e) {
      std::string block, eq, rg;
      if (e < kd) {
        block = "A";
        eq = x.names[static_cast<std::size_t>(e % d)];
        rg = reg[static_cast<std::size_t>(e / d)];
      } else {
        block = "Omega";
        Eigen::Index m = e - kd, c = 0;
        while (m >= d - c) {
          m -= d - c;
          ++c;
        }
        eq = x.names[static_cast<std::size_t>(c + m)];
        rg = x.names[static_cast<std::size_t>(c)];
      }
      w.row({num(grid[i]), block, eq, rg, num(est(e)), num(se(e)), num(lo(e)), num(hi(e))});
    }
  }
  result["parameter_order"] = "vec(A) column-major over [const, lags], then vech(Omega)";
  result["regressors"] = reg;
  result["grid"] = points;
  if (cfg.write_csv) out.add("fit_coefficients.csv", w.str());
}

inline void run_irf(const RunConfig& cfg, const SeriesMatrix& x, json& result, OutputBundle& out) {
  const Specification s = specify(x, cfg);
  const TvVarFit fit = fit_tvvar(build_regressors(x, s.p), KernelSpec{KernelFamily::Epanechnikov, s.h}, {0.5});
  const std::vector<double> taus = resolve_grid(cfg, {0.5});
  const int H = cfg.horizons.empty() ? 21 : cfg.horizons.front();
  const IrfResult irf = compute_irf(fit, taus, H, cfg.alpha);
  const double z = normal_quantile(1.0 - cfg.alpha / 2.0);
  const int d = x.d();
  result["specification"] = spec_json(s);
  json pts = json::array();
  CsvWriter w({"tau", "horizon", "response", "shock", "estimate", "se", "lower", "upper"});
  for (std::size_t i = 0; i < taus.size(); ++i) {
    json pt;
    pt["tau"] = taus[i];
    pt["unstable"] = static_cast<bool>(irf.unstable[i]);
    pt["jittered"] = static_cast<bool>(irf.jittered[i]);
    pt["clipped_variances"] = irf.clipped[i];
    json hz = json::array();
    for (int j = 0; j < H; ++j) {
      const Mat& b = irf.B_hat[i][static_cast<std::size_t>(j)];
      const Vec& se = irf.se[i][static_cast<std::size_t>(j)];
      hz.push_back({{"horizon", j}, {"B", mat_json(b)}, {"se", vec_json(se)}});
      for (int e = 0; e < d * d; ++e) {
        const int r = e % d, c = e / d;
        w.row({num(taus[i]), std::to_string(j), x.names[static_cast<std::size_t>(r)],
               x.names[static_cast<std::size_t>(c)], num(b(r, c)), num(se(e)), num(b(r, c) - z * se(e)),
               num(b(r, c) + z * se(e))});
      }
    }
    pt["horizons"] = hz;
    pts.push_back(std::move(pt));
  }
  result["irf"] = pts;
  if (cfg.write_csv) out.add("irf.csv", w.str());
}

inline void run_trend(const RunConfig& cfg, const SeriesMatrix& x, json& result, OutputBundle& out) {
  const int T = x.T();
  std::optional<McvTrace> mcv;
  double h;
  if (cfg.bandwidth) {
    h = *cfg.bandwidth;
  } else {
    mcv = mcv_bandwidth(x, default_mcv_k(T), default_mcv_grid(T));
    h = mcv->h_mcv;
  }
  const std::vector<double> grid = resolve_grid(cfg, time_grid(T));
  DwbConfig boot;
  if (cfg.block_length) boot.block_length = *cfg.block_length;
  if (cfg.boot_reps) boot.replications = *cfg.boot_reps;
  if (cfg.boot_c0) boot.c0 = *cfg.boot_c0;
  boot.seed = cfg.seed;
  const BootstrapBand band = dwb_bands(x, h, boot, cfg.alpha, grid);

  // long-run mean implied by the local VAR
  RunConfig var_cfg = cfg;
  var_cfg.bandwidth.reset();
  const Specification s = specify(x, var_cfg);
  const TvVarFit fit = fit_tvvar(build_regressors(x, s.p), KernelSpec{KernelFamily::Epanechnikov, s.h}, {0.5});
  Mat lr = Mat::Constant(static_cast<Eigen::Index>(grid.size()), x.d(), std::numeric_limits<double>::quiet_NaN());
  std::vector<std::string> lr_note(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) {
    try {
      lr.row(static_cast<Eigen::Index>(i)) = longrun_mean(fit, grid[i]).transpose();
    } catch (const NumericalError& e) {
      lr_note[i] = e.what();
    }
  });

  json j;
  j["bandwidth"] = h;
  j["bandwidth_rule"] = mcv ? "modified-cross-validation" : "fixed";
  if (mcv) {
    json obj = json::array();
    for (double v : mcv->objective) obj.push_back(std::isfinite(v) ? json(v) : json(nullptr));
    j["mcv"] = {{"k", mcv->k}, {"bandwidths", mcv->bandwidths}, {"objective", obj}};
  }
  j["bootstrap"] = {{"h_tilde", band.h_tilde},
                    {"block_length", band.block_length},
                    {"replications", band.replications},
                    {"seed", boot.seed},
                    {"factorization_fallback", band.factorization_fallback},
                    {"swapped", band.swapped},
                    {"clipped", band.clipped}};
  j["longrun_var"] = spec_json(s);
  j["grid"] = grid;
  j["mu_hat"] = mat_json(band.mu_hat);
  j["lower"] = mat_json(band.lower);
  j["upper"] = mat_json(band.upper);
  j["longrun_mean"] = mat_json(lr);
  json notes = json::array();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!lr_note[i].empty()) notes.push_back({{"tau", grid[i]}, {"reason", lr_note[i]}});
  }
  j["longrun_unavailable"] = notes;
  result["trend"] = j;
  if (!cfg.write_csv) return;
  CsvWriter w({"tau", "series", "mu_hat", "lower", "upper", "longrun_mean"});
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    for (int c = 0; c < x.d(); ++c) {
      w.row({num(grid[i]), x.names[static_cast<std::size_t>(c)], num(band.mu_hat(r, c)), num(band.lower(r, c)),
             num(band.upper(r, c)), num(lr(r, c))});
    }
  }
  out.add("trend.csv", w.str());
}

inline void run_forecast(const RunConfig& cfg, const SeriesMatrix& x, json& result, OutputBundle& out) {
  ForecastTask task;
  if (!cfg.horizons.empty()) task.horizons = cfg.horizons;
  if (cfg.first_origin) task.first_origin = *cfg.first_origin;
  if (cfg.lag) task.tv_lag = *cfg.lag;
  task.cvar_lag = cfg.cvar_lag ? *cfg.cvar_lag : task.tv_lag;
  task.bandwidth = cfg.bandwidth;
  if (cfg.reselect_every) task.reselect_every = *cfg.reselect_every;
  task.iterated = cfg.iterated;
  const RmseTable t = expanding_forecast(x, task);
  json j;
  j["first_origin"] = task.resolved_first_origin(x.T());
  j["tv_lag"] = task.tv_lag;
  j["cvar_lag"] = task.cvar_lag;
  j["multi_step"] = task.iterated ? "iterated" : "single-projection";
  j["series"] = t.series;
  j["horizons"] = t.horizons;
  j["methods"] = t.methods;
  j["rmse"] = t.rmse;
  j["ratio"] = t.ratio;
  j["evaluated_origins"] = t.evaluated;
  json sk = json::array();
  for (const auto& [o, why] : t.skipped) sk.push_back({{"origin", o}, {"reason", why}});
  j["skipped"] = sk;
  json bw = json::array();
  for (const auto& [o, h] : t.bandwidths) bw.push_back({{"origin", o}, {"h", std::isfinite(h) ? json(h) : json(nullptr)}});
  j["bandwidths"] = bw;
  result["forecast"] = j;
  if (!cfg.write_csv) return;
  CsvWriter w({"horizon", "series", "method", "rmse", "ratio"});
  for (std::size_t k = 0; k < t.horizons.size(); ++k) {
    for (std::size_t s = 0; s < t.series.size(); ++s) {
      for (std::size_t m = 0; m < t.methods.size(); ++m) {
        w.row({std::to_string(t.horizons[k]), t.series[s], t.methods[m], num(t.rmse[m][k][s]), num(t.ratio[m][k][s])});
      }
    }
  }
  out.add("forecast.csv", w.str());
}

/// Built-in coefficient paths.
inline CoefficientPath preset_path(const std::string& name) {
  if (name == "appendix-b1") return appendix_b1_path();
  if (name == "damped-rotation") {
    // noiseless, persistently oscillating VAR(1); handy for exact-recovery checks
    VarCoefficients c;
    c.a = Vec(2);
    c.a << 1.0, 0.0;
    const double r = 0.995, th = 0.3;
    Mat a1(2, 2);
    a1 << r * std::cos(th), -r * std::sin(th), r * std::sin(th), r * std::cos(th);
    c.lags = {a1};
    c.omega = Mat::Zero(2, 2);
    return constant_path(c, name);
  }
  if (name == "constant-var1") {
    VarCoefficients c;
    c.a = Vec(2);
    c.a << 0.2, -0.1;
    Mat a1(2, 2);
    a1 << 0.5, 0.1, -0.2, 0.4;
    c.lags = {a1};
    c.omega = Mat::Identity(2, 2);
    return constant_path(c, name);
  }
  throw ConfigError("unknown preset '" + name + "' (known: appendix-b1, constant-var1, damped-rotation)");
}

/// {"grid": [...], "points": [{"a": [...], "lags": [[[..],..],..], "omega": [[..],..]}, ...]}
inline CoefficientPath path_from_json(const json& j, const std::string& name) {
  try {
    std::vector<double> grid = j.at("grid").get<std::vector<double>>();
    std::vector<VarCoefficients> values;
    auto to_mat = [](const json& m) {
      const auto rows = m.get<std::vector<std::vector<double>>>();
      Mat out(static_cast<Eigen::Index>(rows.size()), rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size()));
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (static_cast<Eigen::Index>(rows[i].size()) != out.cols()) throw ConfigError("path file: ragged matrix");
        for (std::size_t k = 0; k < rows[i].size(); ++k) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
      }
      return out;
    };
    for (const auto& p : j.at("points")) {
      VarCoefficients c;
      const auto a = p.at("a").get<std::vector<double>>();
      c.a = Eigen::Map<const Vec>(a.data(), static_cast<Eigen::Index>(a.size()));
      for (const auto& l : p.at("lags")) c.lags.push_back(to_mat(l));
      c.omega = to_mat(p.at("omega"));
      values.push_back(std::move(c));
    }
    return tabulated_path(std::move(grid), std::move(values), name);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("path file: ") + e.what());
  }
}

inline void run_simulate(const RunConfig& cfg, json& result, OutputBundle& out) {
  std::optional<CoefficientPath> path;
  if (!cfg.preset.empty()) {
    path = preset_path(cfg.preset);
  } else {
    std::ifstream in(cfg.path_file);
    if (!in) throw ConfigError("cannot open path file '" + cfg.path_file + "'");
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw ConfigError(std::string("path file: ") + e.what());
    }
    path = path_from_json(j, cfg.path_file);
  }
  const SeriesMatrix x = simulate_tvvar(*path, cfg.sample_sizes.front(), cfg.seed);
  result["simulation"] = {{"path", path->name()},
                          {"d", path->d()},
                          {"p", path->p()},
                          {"T", x.T()},
                          {"seed", cfg.seed},
                          {"max_spectral_radius", path->max_radius()},
                          {"locally_explosive", path->locally_explosive()}};
  if (cfg.write_csv) out.add("simulate.csv", CsvWriter::series_text(x));
  if (cfg.write_json) result["series"] = mat_json(x.values);
}

inline void run_montecarlo(const RunConfig& cfg, json& result, OutputBundle& out) {
  const CoefficientPath path = preset_path(cfg.preset);
  McOptions opt;
  opt.alpha = cfg.alpha;
  opt.exclude_boundary = cfg.exclude_boundary;
  if (cfg.max_lag) opt.selection.max_lag = *cfg.max_lag;
  const McReport rep = run_monte_carlo(path, cfg.sample_sizes, *cfg.reps, cfg.seed, opt);
  json cells = json::array();
  CsvWriter w({"T", "replications", "failed", "freq_under", "freq_equal", "freq_over", "rmse_A", "rmse_Omega",
               "coverage_A", "coverage_Omega", "mean_bandwidth"});
  for (const auto& c : rep.cells) {
    cells.push_back({{"T", c.T},
                     {"replications", c.replications},
                     {"failed", c.failed},
                     {"failures", c.failure_messages},
                     {"freq_under", c.freq_under},
                     {"freq_equal", c.freq_equal},
                     {"freq_over", c.freq_over},
                     {"rmse_A", c.rmse_A},
                     {"rmse_Omega", c.rmse_Omega},
                     {"coverage_A", c.coverage_A},
                     {"coverage_Omega", c.coverage_Omega},
                     {"mean_bandwidth", c.mean_bandwidth},
                     {"stream_base", c.stream_base}});
    w.row({std::to_string(c.T), std::to_string(c.replications), std::to_string(c.failed), num(c.freq_under),
           num(c.freq_equal), num(c.freq_over), num(c.rmse_A), num(c.rmse_Omega), num(c.coverage_A),
           num(c.coverage_Omega), num(c.mean_bandwidth)});
  }
  json j{{"path", rep.path}, {"true_p", rep.true_p}, {"n_reps", rep.n_reps}, {"seed", rep.seed},
         {"alpha", rep.alpha}, {"locally_explosive", path.locally_explosive()}, {"cells", cells}};
  if (cfg.timing) j["wall_clock_seconds"] = rep.wall_clock_seconds;
  result["montecarlo"] = j;
  if (cfg.write_csv) out.add("montecarlo.csv", w.str());
}

} // namespace detail

inline int exit_code(ErrorKind k) {
  switch (k) {
  case ErrorKind::Config: return 2;
  case ErrorKind::Data: return 3;
  case ErrorKind::Numerical: return 4;
  }
  return 4;
}

struct RunOutcome {
  int status = 0;
  std::vector<std::string> files;
  json error; ///< null on success
};

/// Validates, computes, and only then writes the bundle.
inline RunOutcome run(const RunConfig& cfg) {
  RunOutcome outcome;
  auto fail = [&](const std::string& kind, int code, const std::string& msg) {
    outcome.status = code;
    outcome.error = {{"schema", kSchemaVersion}, {"version", kVersion}, {"error", {{"kind", kind}, {"message", msg}}}};
  };
  try {
    cfg.validate();
    if (cfg.threads > 0) set_max_threads(cfg.threads);
    json result;
    OutputBundle out;
    std::optional<SeriesMatrix> x;
    if (cfg.uses_input()) {
      x = ingest_csv(cfg.input);
      result["data"] = detail::series_json(*x);
    }
    switch (cfg.command) {
    case Command::Select: detail::run_select(cfg, *x, result, out); break;
    case Command::Fit: detail::run_fit(cfg, *x, result, out); break;
    case Command::Irf: detail::run_irf(cfg, *x, result, out); break;
    case Command::Trend: detail::run_trend(cfg, *x, result, out); break;
    case Command::Forecast: detail::run_forecast(cfg, *x, result, out); break;
    case Command::Simulate: detail::run_simulate(cfg, result, out); break;
    case Command::MonteCarlo: detail::run_montecarlo(cfg, result, out); break;
    }
    if (cfg.write_json) {
      json doc{{"schema", kSchemaVersion}, {"version", kVersion}, {"config", cfg.to_json()}, {"result", result}};
      out.add(to_string(cfg.command) + ".json", doc.dump(2) + "\n");
    }
    outcome.files = out.commit(cfg.out_dir);
  } catch (const Error& e) {
    const char* kind = e.kind() == ErrorKind::Config ? "config" : e.kind() == ErrorKind::Data ? "data" : "numerical";
    fail(kind, exit_code(e.kind()), e.what());
  } catch (const std::invalid_argument& e) {
    fail("config", 2, e.what());
  } catch (const std::exception& e) {
    fail("numerical", 4, e.what());
  }
  return outcome;
}

} // namespace tvvar
