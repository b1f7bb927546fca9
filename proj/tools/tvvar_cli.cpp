#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "tvvar/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Time-varying VAR toolkit"};
  app.set_version_flag("--version", std::string(tvvar::kVersion));
  app.require_subcommand(1);

  tvvar::RunConfig cfg;
  std::string formats = "json,csv";
  std::optional<int> horizons_count;
  std::vector<int> horizon_list;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--out", cfg.out_dir, "output directory")->capture_default_str();
    sub->add_option("--seed", cfg.seed, "random seed")->capture_default_str();
    sub->add_option("--threads", cfg.threads, "worker thread cap (0 = TVVAR_THREADS or all cores)");
    sub->add_option("--alpha", cfg.alpha, "1 - confidence level")->capture_default_str();
    sub->add_option("--formats", formats, "comma-separated subset of json,csv")->capture_default_str();
  };
  auto input = [&](CLI::App* sub) { sub->add_option("--input", cfg.input, "CSV with a header row")->required(); };
  auto spec = [&](CLI::App* sub, bool fixed_lag) {
    if (fixed_lag) sub->add_option("--lag", cfg.lag, "lag order (default: information criterion)");
    sub->add_option("--max-lag", cfg.max_lag, "largest candidate lag for automatic selection");
    sub->add_option("--bandwidth", cfg.bandwidth, "bandwidth (default: cross-validation)");
  };
  auto grid = [&](CLI::App* sub) {
    sub->add_option("--tau", cfg.taus, "evaluation points in [0,1]")->delimiter(',');
    sub->add_option("--grid-points", cfg.grid_points, "evenly spaced evaluation points on [0,1]");
  };

  auto* select = app.add_subcommand("select", "lag order and bandwidth traces");
  input(select), common(select), spec(select, false);

  auto* fit = app.add_subcommand("fit", "coefficients, innovation covariance and pointwise intervals");
  input(fit), common(fit), spec(fit, true), grid(fit);

  auto* irf = app.add_subcommand("irf", "structural impulse responses with delta-method intervals");
  input(irf), common(irf), spec(irf, true), grid(irf);
  irf->add_option("--horizons", horizons_count, "number of horizons j = 0..H-1 (default 21)");

  auto* trend = app.add_subcommand("trend", "kernel trend with bootstrap bands and long-run mean path");
  input(trend), common(trend), spec(trend, true), grid(trend);
  trend->add_option("--block-length", cfg.block_length, "dependent multiplier block length");
  trend->add_option("--boot-reps", cfg.boot_reps, "bootstrap replications");
  trend->add_option("--boot-c0", cfg.boot_c0, "pilot oversmoothing constant");

  auto* forecast = app.add_subcommand("forecast", "expanding-window RMSE against a constant VAR");
  input(forecast), common(forecast);
  forecast->add_option("--lag", cfg.lag, "lag order of the time-varying model (default 3)");
  forecast->add_option("--cvar-lag", cfg.cvar_lag, "lag order of the benchmark (default: --lag)");
  forecast->add_option("--bandwidth", cfg.bandwidth, "fixed bandwidth (default: cross-validation)");
  forecast->add_option("--horizons", horizon_list, "forecast horizons (default 1,2,4,8)")->delimiter(',');
  forecast->add_option("--first-origin", cfg.first_origin, "observations at the first origin (default 0.6T)");
  forecast->add_option("--reselect-every", cfg.reselect_every, "bandwidth refresh interval in origins");
  forecast->add_flag("--iterated", cfg.iterated, "iterate the one-step model for h > 1");

  auto* simulate = app.add_subcommand("simulate", "draw a series from a coefficient path");
  common(simulate);
  simulate->add_option("--preset", cfg.preset, "appendix-b1, constant-var1 or damped-rotation");
  simulate->add_option("--path-file", cfg.path_file, "JSON tabulated coefficient path");
  simulate->add_option("--T", cfg.sample_sizes, "sample size")->delimiter(',');

  auto* mc = app.add_subcommand("montecarlo", "lag-selection, RMSE and coverage study");
  common(mc);
  mc->add_option("--preset", cfg.preset, "coefficient path")->required();
  mc->add_option("--T", cfg.sample_sizes, "sample sizes")->delimiter(',')->required();
  mc->add_option("--reps", cfg.reps, "replications per sample size")->required();
  mc->add_option("--max-lag", cfg.max_lag, "largest candidate lag");
  mc->add_flag("--exclude-boundary", cfg.exclude_boundary, "score only tau in [h, 1-h]");
  mc->add_flag("--timing", cfg.timing, "record wall-clock seconds (breaks byte-identical output)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    cfg.command = tvvar::parse_command(app.get_subcommands().front()->get_name());
  } catch (const tvvar::Error& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
  if (horizons_count) cfg.horizons = {*horizons_count};
  if (!horizon_list.empty()) cfg.horizons = horizon_list;
  cfg.write_json = formats.find("json") != std::string::npos;
  cfg.write_csv = formats.find("csv") != std::string::npos;

  const tvvar::RunOutcome out = tvvar::run(cfg);
  if (out.status != 0) {
    std::cerr << out.error.dump() << "\n";
    return out.status;
  }
  for (const auto& f : out.files) std::cout << f << "\n";
  return 0;
}
