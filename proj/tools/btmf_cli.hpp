#pragma once

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "btmf/btmf.hpp"

namespace btmf::cli {

namespace fs = std::filesystem;
using nlohmann::json;

enum ExitCode { ok = 0, usage = 1, data = 2, numerical = 3 };

inline int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config:
    case ErrorKind::invalid_parameter:
      return usage;
    case ErrorKind::decomposition:
      return numerical;
    default:
      return data;
  }
}

/// One line: "btmf: error=<kind> exit=<code> reason=<text>".
inline void report_failure(std::ostream& err, std::string_view kind, int code, std::string reason) {
  for (char& c : reason)
    if (c == '\n' || c == '\r') c = ' ';
  err << "btmf: error=" << kind << " exit=" << code << " reason=" << reason << '\n';
}

struct Common {
  std::string config_file;
  std::vector<std::string> sets;
  int threads = 1;
  bool quiet = false;
  Index progress_every = 10;
  // Shorthand flags; each maps onto a dotted key.
  std::string rank, lags, seed, iters, burn_in, f_iters, f_burn_in, increment, critical, horizon, refresh;
};

inline int default_threads() {
  if (const char* env = std::getenv("BTMF_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  return 1;
}

inline void add_common(CLI::App& app, Common& c, bool model_flags) {
  app.add_option("--config", c.config_file, "key = value configuration file")->check(CLI::ExistingFile);
  app.add_option("--set", c.sets, "override one configuration key (key=value); repeatable");
  app.add_option("--threads", c.threads, "worker threads for per-channel sampling (default $BTMF_THREADS or 1)")
      ->check(CLI::PositiveNumber);
  app.add_flag("--quiet", c.quiet, "suppress progress lines");
  app.add_option("--progress-every", c.progress_every, "iterations between progress lines")
      ->check(CLI::PositiveNumber);
  if (!model_flags) return;
  app.add_option("--rank", c.rank, "model.rank");
  app.add_option("--lags", c.lags, "model.lags, comma separated");
  app.add_option("--seed", c.seed, "chain.seed");
  app.add_option("--iters", c.iters, "chain.n_iters_impute");
  app.add_option("--burn-in", c.burn_in, "chain.burn_in_impute");
  app.add_option("--forecast-iters", c.f_iters, "chain.n_iters_forecast");
  app.add_option("--forecast-burn-in", c.f_burn_in, "chain.burn_in_forecast");
  app.add_option("--increment", c.increment, "window.increment");
  app.add_option("--critical", c.critical, "window.critical");
  app.add_option("--horizon", c.horizon, "forecast.horizon");
  app.add_option("--refresh", c.refresh, "forecast.refresh_interval");
}

/// Configuration file, then --set values, then shorthand flags.
inline RunConfig resolve_config(const Common& c) {
  KeyValues values;
  if (!c.config_file.empty())
    for (auto& [k, v] : io::parse_key_values(io::read_file(c.config_file), c.config_file)) values[k] = v;
  for (const std::string& s : c.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0)
      throw Error(ErrorKind::config, "--set expects key=value, got '" + s + "'");
    values[s.substr(0, eq)] = s.substr(eq + 1);
  }
  const std::pair<const std::string*, const char*> shorthands[] = {
      {&c.rank, "model.rank"},
      {&c.lags, "model.lags"},
      {&c.seed, "chain.seed"},
      {&c.iters, "chain.n_iters_impute"},
      {&c.burn_in, "chain.burn_in_impute"},
      {&c.f_iters, "chain.n_iters_forecast"},
      {&c.f_burn_in, "chain.burn_in_forecast"},
      {&c.increment, "window.increment"},
      {&c.critical, "window.critical"},
      {&c.horizon, "forecast.horizon"},
      {&c.refresh, "forecast.refresh_interval"},
  };
  for (const auto& [field, key] : shorthands)
    if (!field->empty()) values[key] = *field;
  RunConfig config = apply_config(RunConfig{}, values);
  config.chain.threads = c.threads;
  return config;
}

class Progress {
 public:
  Progress(std::ostream& out, const Common& c) : out_(out), quiet_(c.quiet), every_(c.progress_every) {}

  void emit(const json& event) const {
    if (!quiet_) out_ << event.dump() << '\n';
  }

  IterationObserver iterations(Index window, std::string_view stage) const {
    if (quiet_) return {};
    return [this, window, stage = std::string(stage)](const IterationEvent& ev) {
      if ((ev.iteration + 1) % every_ != 0) return;
      emit({{"event", "iteration"}, {"window", window}, {"stage", stage}, {"iteration", ev.iteration + 1},
            {"rmse_observed", ev.rmse_observed}, {"tau_eps", ev.tau_eps}});
    };
  }

 private:
  std::ostream& out_;
  bool quiet_;
  Index every_;
};

inline void ensure_not_input(const fs::path& out, const std::vector<fs::path>& inputs) {
  std::error_code ec;
  for (const fs::path& in : inputs)
    if (fs::exists(out, ec) && fs::equivalent(out, in, ec))
      throw Error(ErrorKind::data, "output '" + out.string() + "' would overwrite an input file");
}

inline std::string band_file(const ObservationSet& like, const PredictionResult& r) {
  std::string out = "channel,group,column,lower_3sd,upper_3sd\n";
  for (Index i = 0; i < r.mean.rows(); ++i)
    for (Index t = 0; t < r.mean.cols(); ++t) {
      const double lo = r.mean(i, t) - 3.0 * r.std(i, t);
      const double hi = r.mean(i, t) + 3.0 * r.std(i, t);
      out += like.channel_ids[static_cast<std::size_t>(i)] + ',' +
             like.channel_groups[static_cast<std::size_t>(i)] + ',' + std::to_string(r.first_column + t) + ',';
      if (std::isfinite(lo)) io::detail::append_double(out, lo);
      out += ',';
      if (std::isfinite(hi)) io::detail::append_double(out, hi);
      out += '\n';
    }
  return out;
}

/// Writes <prefix>_mean.txt, <prefix>_std.txt, <prefix>_series.csv and,
/// on request, <prefix>_band.csv.
inline void write_prediction(const fs::path& dir, const std::string& prefix, const ObservationSet& like,
                             const PredictionResult& r, bool band, const ObservationSet* truth,
                             const std::vector<fs::path>& inputs) {
  const auto target = [&](const std::string& name) {
    fs::path p = dir / (prefix + name);
    ensure_not_input(p, inputs);
    return p;
  };
  io::write_matrix(target("_mean.txt"), io::labelled_matrix(like, r.mean, r.first_column));
  io::write_matrix(target("_std.txt"), io::labelled_matrix(like, r.std, r.first_column));
  io::write_file_atomic(target("_series.csv"), io::format_series(like, r, truth));
  if (band) io::write_file_atomic(target("_band.csv"), band_file(like, r));
}

inline std::optional<ObservationSet> load_optional(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return io::load_matrix(path);
}

inline int cmd_mask(const std::string& input, const std::string& out_data, const std::string& out_mask,
                    const std::string& scenario, double eta_r, double eta_s, Index block,
                    const std::vector<std::string>& groups, bool shared, std::uint64_t seed) {
  const ObservationSet obs = io::load_matrix(input);
  MissingSpec spec;
  spec.scenario = parse_scenario(scenario);
  spec.eta_random = eta_r;
  spec.eta_structured = eta_s;
  spec.block_length = block;
  spec.target_groups = groups;
  spec.shared_blocks = shared;
  spec.seed = seed;
  const Mask mask = generate_mask(spec, obs.channel_groups, obs.length());
  ObservationSet masked = obs;
  apply_mask(masked, mask);
  ensure_not_input(out_data, {input});
  ensure_not_input(out_mask, {input});
  io::write_matrix(out_data, masked);
  io::write_matrix(out_mask, io::mask_matrix(obs, mask));

  const std::vector<Index> rows = detail::target_rows(spec, obs.channel_groups);
  Index dropped = 0;
  for (Index r : rows)
    for (Index t = 0; t < obs.length(); ++t) dropped += mask(r, t) == 0;
  const auto cells = static_cast<Index>(rows.size()) * obs.length();
  std::cout << json{{"event", "mask"},
                    {"scenario", std::string(to_string(spec.scenario))},
                    {"target_cells", cells},
                    {"masked_cells", dropped},
                    {"missing_fraction", cells > 0 ? static_cast<double>(dropped) / static_cast<double>(cells) : 0.0}}
                   .dump()
            << '\n';
  return ok;
}

inline void write_report(const fs::path& path, const std::vector<ReportRow>& rows,
                         const std::vector<fs::path>& inputs) {
  ensure_not_input(path, inputs);
  io::write_file_atomic(path, format_report(rows));
}

inline int cmd_impute(const Common& c, const std::string& input, const std::string& out_dir, bool band,
                      const std::string& truth_path) {
  const RunConfig config = resolve_config(c);
  const ObservationSet obs = io::load_matrix(input);
  const auto truth = load_optional(truth_path);
  const Progress progress(std::cerr, c);
  const ImputationOutcome out = run_standalone_imputation(obs, config.incremental(),
                                                          RandomSource(config.chain.seed),
                                                          progress.iterations(0, "dynamic"));
  std::vector<fs::path> inputs{input};
  if (truth) inputs.emplace_back(truth_path);
  write_prediction(out_dir, "imputation", obs, out.prediction, band, truth ? &*truth : nullptr, inputs);
  if (truth) {
    const ObservationSet est = io::labelled_matrix(obs, out.prediction.mean, out.prediction.first_column);
    write_report(fs::path(out_dir) / "metrics.csv", evaluation_report(*truth, est, &obs.mask, "imputation"),
                 inputs);
  }
  progress.emit({{"event", "done"}, {"command", "impute"}, {"jitter_events", out.jitter_events}});
  return ok;
}

inline int cmd_forecast(const Common& c, const std::string& input, const std::string& out_dir,
                        Index history, bool band, const std::string& truth_path) {
  const RunConfig config = resolve_config(c);
  const ObservationSet obs = io::load_matrix(input);
  const auto truth = load_optional(truth_path);
  require(history >= 1 && history <= obs.length(), ErrorKind::config,
          "--history must lie in [1, " + std::to_string(obs.length()) + "]");
  const Progress progress(std::cerr, c);
  const ObservationSet window = obs.slice(0, history);
  const IncrementalConfig inc = config.incremental();
  const RandomSource root(config.chain.seed);
  const ImputationOutcome imputed =
      run_standalone_imputation(window, inc, root, progress.iterations(0, "dynamic"));
  ObservationSet incoming = empty_continuation(obs, 0);
  if (history < obs.length()) incoming = obs.slice(history, obs.length());
  if (config.horizon > 0) {
    const ObservationSet beyond = empty_continuation(obs, config.horizon);
    incoming = history < obs.length() ? concat_columns(incoming, beyond) : beyond;
  }
  require(incoming.length() >= 1, ErrorKind::config,
          "nothing to forecast: history covers the data and forecast.horizon is 0");
  const RollingForecastOutcome f =
      rolling_forecast(window, imputed.state, imputed.ar, incoming, inc.prior, inc.chain,
                       ForecastOptions{config.effective_refresh(), config.precision_scope},
                       window_streams(root, 0).forecast);
  std::vector<fs::path> inputs{input};
  if (truth) inputs.emplace_back(truth_path);
  write_prediction(out_dir, "forecast", obs, f.forecast, band, truth ? &*truth : nullptr, inputs);
  if (truth) {
    const ObservationSet est = io::labelled_matrix(obs, f.forecast.mean, f.forecast.first_column);
    write_report(fs::path(out_dir) / "metrics.csv", evaluation_report(*truth, est, nullptr, "forecast"),
                 inputs);
  }
  progress.emit({{"event", "done"}, {"command", "forecast"}});
  return ok;
}

inline int cmd_run(const Common& c, const std::string& input, const std::string& out_dir, bool band,
                   const std::string& truth_path, const std::string& timing_path,
                   const std::string& window_dir) {
  const RunConfig config = resolve_config(c);
  const ObservationSet obs = io::load_matrix(input);
  const auto truth = load_optional(truth_path);
  const Progress progress(std::cerr, c);
  const WindowPlan plan = plan_windows(obs.length(), config.increment, config.critical);

  IncrementalObservers observers;
  if (!c.quiet) {
    observers.progress = [&](const ProgressEvent& ev) {
      if ((ev.iteration + 1) % c.progress_every != 0) return;
      progress.emit({{"event", "iteration"}, {"window", ev.window}, {"stage", std::string(to_string(ev.stage))},
                     {"iteration", ev.iteration + 1}, {"rmse_observed", ev.rmse_observed}});
    };
  }
  std::string timing = "window,start,end,stage,seconds\n";
  observers.window = [&](const WindowReport& r) {
    progress.emit({{"event", "window"}, {"window", r.index}, {"start", r.window.start}, {"end", r.window.end},
                   {"stage", std::string(to_string(r.window.stage))}, {"seconds", r.seconds}});
    timing += std::to_string(r.index) + ',' + std::to_string(r.window.start) + ',' +
              std::to_string(r.window.end) + ',' + std::string(to_string(r.window.stage)) + ',' +
              std::to_string(r.seconds) + '\n';
    if (!window_dir.empty())
      write_prediction(window_dir, "window" + std::to_string(r.index) + "_imputation", obs,
                       r.imputation->prediction, false, nullptr, {input});
  };

  const IncrementalOutcome out =
      run_incremental(obs, plan, config.incremental(), RandomSource(config.chain.seed), observers);

  std::vector<fs::path> inputs{input};
  if (truth) inputs.emplace_back(truth_path);
  write_prediction(out_dir, "imputation", obs, out.imputation, band, truth ? &*truth : nullptr, inputs);
  if (out.forecast.mean.cols() > 0)
    write_prediction(out_dir, "forecast", obs, out.forecast, band, truth ? &*truth : nullptr, inputs);
  io::write_matrix(fs::path(out_dir) / "coverage.txt",
                   io::labelled_matrix(obs, out.coverage.cast<double>(), obs.first_column));
  std::string plan_csv = "window,start,end,stage\n";
  for (std::size_t w = 0; w < plan.windows.size(); ++w)
    plan_csv += std::to_string(w) + ',' + std::to_string(plan.windows[w].start) + ',' +
                std::to_string(plan.windows[w].end) + ',' + std::string(to_string(plan.windows[w].stage)) + '\n';
  io::write_file_atomic(fs::path(out_dir) / "windows.csv", plan_csv);
  if (!timing_path.empty()) io::write_file_atomic(timing_path, timing);
  if (truth) {
    auto rows = evaluation_report(
        *truth, io::labelled_matrix(obs, out.imputation.mean, out.imputation.first_column), &obs.mask,
        "imputation");
    if (out.forecast.mean.cols() > 0) {
      const auto f_rows = evaluation_report(
          *truth, io::labelled_matrix(obs, out.forecast.mean, out.forecast.first_column), nullptr, "forecast");
      rows.insert(rows.end(), f_rows.begin(), f_rows.end());
    }
    write_report(fs::path(out_dir) / "metrics.csv", rows, inputs);
  }
  progress.emit({{"event", "done"}, {"command", "run"}, {"windows", plan.windows.size()}});
  return ok;
}

inline int cmd_eval(const std::string& truth_path, const std::string& estimate_path,
                    const std::string& mask_path, const std::string& kind, const std::string& out) {
  const ObservationSet truth = io::load_matrix(truth_path);
  const ObservationSet estimate = io::load_matrix(estimate_path);
  std::optional<Mask> mask;
  if (!mask_path.empty()) {
    const ObservationSet m = io::load_matrix(mask_path);
    require(m.first_column == truth.first_column && m.length() == truth.length() &&
                m.channels() == truth.channels(),
            ErrorKind::data, "mask file does not cover the truth columns");
    mask = io::mask_from_matrix(m);
  }
  const auto rows = evaluation_report(truth, estimate, mask ? &*mask : nullptr, kind);
  const std::string text = format_report(rows);
  if (out.empty()) {
    std::cout << text;
  } else {
    write_report(out, rows, {truth_path, estimate_path});
  }
  return ok;
}

inline int cmd_synth(const SyntheticSpec& spec, const std::string& out, const std::string& out_clean) {
  const SyntheticData d = generate_synthetic(spec);
  io::write_matrix(out, d.obs);
  if (!out_clean.empty()) io::write_matrix(out_clean, io::labelled_matrix(d.obs, d.clean, d.obs.first_column));
  return ok;
}

inline std::vector<MissingSpec> parse_sweep_scenarios(const std::vector<std::string>& items, Index block,
                                                      const std::vector<std::string>& groups,
                                                      std::uint64_t seed) {
  std::vector<MissingSpec> out;
  for (const std::string& item : items) {
    const auto colon = item.find(':');
    if (colon == std::string::npos)
      throw Error(ErrorKind::config, "scenario '" + item + "' must look like RM:0.3, SM:0.2 or MM:0.1+0.2");
    MissingSpec spec;
    spec.scenario = parse_scenario(item.substr(0, colon));
    spec.block_length = block;
    spec.target_groups = groups;
    spec.seed = seed;
    const std::string rate = item.substr(colon + 1);
    if (spec.scenario == MissingScenario::mixed) {
      const auto plus = rate.find('+');
      if (plus == std::string::npos) throw Error(ErrorKind::config, "MM rate must be <structured>+<random>");
      spec.eta_structured = detail::parse_real("scenario", rate.substr(0, plus));
      spec.eta_random = detail::parse_real("scenario", rate.substr(plus + 1));
    } else if (spec.scenario == MissingScenario::random) {
      spec.eta_random = detail::parse_real("scenario", rate);
    } else {
      spec.eta_structured = detail::parse_real("scenario", rate);
    }
    spec.validate();
    out.push_back(spec);
  }
  return out;
}

inline int cmd_sweep(const Common& c, const std::string& input, const std::string& out,
                     const std::vector<Index>& ranks, const std::vector<std::string>& scenarios, Index block,
                     const std::vector<std::string>& groups, std::uint64_t mask_seed) {
  const RunConfig config = resolve_config(c);
  const ObservationSet truth = io::load_matrix(input);
  require(truth.observed_count() == truth.channels() * truth.length(), ErrorKind::data,
          "sweep input must be fully observed");
  SweepConfig sweep;
  sweep.ranks = ranks;
  sweep.scenarios = parse_sweep_scenarios(scenarios, block, groups, mask_seed);
  sweep.base = config.incremental();
  const Progress progress(std::cerr, c);
  const auto cells = run_rank_sweep(truth, sweep, RandomSource(config.chain.seed), [&](const SweepCell& cell) {
    progress.emit({{"event", "sweep_cell"}, {"rank", cell.rank}, {"scenario", std::string(to_string(cell.scenario))},
                   {"eta", cell.eta}, {"rho", cell.stats.rho}, {"seconds", cell.seconds}});
  });
  const std::string table = format_sweep_table(cells);
  if (out.empty()) {
    std::cout << table;
  } else {
    ensure_not_input(out, {input});
    io::write_file_atomic(out, table);
  }
  return ok;
}

/// Parses argv and runs one subcommand. Returns the process exit status.
inline int cli_dispatch(int argc, char** argv) {
  CLI::App app{"Bayesian temporal matrix factorization: imputation, forecasting and incremental updating"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "btmf 1.0.0");

  Common common;
  common.threads = default_threads();

  std::string input, output, out_dir, out_mask, truth, scenario = "RM", kind = "imputation", mask_path,
      timing, window_dir;
  double eta_r = 0.0, eta_s = 0.0;
  Index block = 144, history = 0;
  std::vector<std::string> groups, scenarios{"RM:0.3", "SM:0.2"};
  std::vector<Index> ranks{4, 8, 12};
  bool shared = false, band = false;
  std::uint64_t mask_seed = 0;
  SyntheticSpec synth;

  auto* mask = app.add_subcommand("mask", "apply a missing-data scenario to a matrix file");
  mask->add_option("--input", input, "input matrix")->required()->check(CLI::ExistingFile);
  mask->add_option("--out", output, "masked matrix to write")->required();
  mask->add_option("--out-mask", out_mask, "0/1 mask matrix to write (1 = kept)")->required();
  mask->add_option("--scenario", scenario, "RM, SM or MM")->check(CLI::IsMember({"RM", "SM", "MM", "rm", "sm", "mm"}));
  mask->add_option("--eta-random", eta_r, "random missing rate");
  mask->add_option("--eta-structured", eta_s, "structured missing rate");
  mask->add_option("--block-length", block, "columns per structured block")->check(CLI::PositiveNumber);
  mask->add_option("--groups", groups, "channel groups to mask (default: all)")->delimiter(',');
  mask->add_flag("--shared-blocks", shared, "place structured blocks at the same columns in every row");
  mask->add_option("--seed", mask_seed, "mask seed");

  auto* impute = app.add_subcommand("impute", "single-window imputation chain");
  add_common(*impute, common, true);
  impute->add_option("--input", input, "input matrix")->required()->check(CLI::ExistingFile);
  impute->add_option("--out-dir", out_dir, "output directory")->required();
  impute->add_option("--truth", truth, "complete matrix for a metrics report")->check(CLI::ExistingFile);
  impute->add_flag("--band", band, "also write the +-3 sd band file");

  auto* forecast = app.add_subcommand("forecast", "impute a history prefix, then rolling forecast the rest");
  add_common(*forecast, common, true);
  forecast->add_option("--input", input, "input matrix")->required()->check(CLI::ExistingFile);
  forecast->add_option("--out-dir", out_dir, "output directory")->required();
  forecast->add_option("--history", history, "columns used as history")->required();
  forecast->add_option("--truth", truth, "complete matrix for a metrics report")->check(CLI::ExistingFile);
  forecast->add_flag("--band", band, "also write the +-3 sd band file");

  auto* run = app.add_subcommand("run", "incremental pipeline over growing then sliding windows");
  add_common(*run, common, true);
  run->add_option("--input", input, "input matrix")->required()->check(CLI::ExistingFile);
  run->add_option("--out-dir", out_dir, "output directory")->required();
  run->add_option("--truth", truth, "complete matrix for a metrics report")->check(CLI::ExistingFile);
  run->add_option("--timing", timing, "write per-window wall times as CSV");
  run->add_flag("--band", band, "also write the +-3 sd band files");
  run->add_option("--window-outputs", window_dir, "write each window's own imputation into this directory");

  auto* eval = app.add_subcommand("eval", "accuracy report for an estimate against the truth");
  eval->add_option("--truth", truth, "complete matrix")->required()->check(CLI::ExistingFile);
  eval->add_option("--estimate", input, "estimate matrix")->required()->check(CLI::ExistingFile);
  eval->add_option("--mask", mask_path, "input mask; only its zero cells are scored")->check(CLI::ExistingFile);
  eval->add_option("--kind", kind, "label for the report rows");
  eval->add_option("--out", output, "report path (default: stdout)");

  auto* syn = app.add_subcommand("synth", "planted low-rank AR dataset");
  syn->add_option("--out", output, "matrix to write")->required();
  syn->add_option("--out-clean", out_mask, "noise-free matrix to write");
  syn->add_option("--channels", synth.channels)->check(CLI::PositiveNumber);
  syn->add_option("--length", synth.length)->check(CLI::PositiveNumber);
  syn->add_option("--rank", synth.rank)->check(CLI::PositiveNumber);
  syn->add_option("--periods", synth.periods, "columns per cycle, one per factor")->delimiter(',');
  syn->add_option("--damping", synth.damping);
  syn->add_option("--innovation-std", synth.innovation_std);
  syn->add_option("--noise", synth.noise_fraction, "observation noise as a fraction of RMS");
  syn->add_option("--temperature-channels", synth.temperature_channels);
  syn->add_option("--seed", synth.seed);

  auto* sweep = app.add_subcommand("sweep", "imputation accuracy over rank x missing scenario");
  add_common(*sweep, common, true);
  sweep->add_option("--input", input, "fully observed matrix")->required()->check(CLI::ExistingFile);
  sweep->add_option("--out", output, "table path (default: stdout)");
  sweep->add_option("--ranks", ranks, "ranks to try")->delimiter(',');
  sweep->add_option("--scenarios", scenarios, "e.g. RM:0.3,SM:0.2,MM:0.1+0.2")->delimiter(',');
  sweep->add_option("--block-length", block)->check(CLI::PositiveNumber);
  sweep->add_option("--groups", groups, "channel groups to mask")->delimiter(',');
  sweep->add_option("--mask-seed", mask_seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_failure(std::cerr, "usage", usage, e.what());
    return usage;
  }

  try {
    if (*mask) return cmd_mask(input, output, out_mask, scenario, eta_r, eta_s, block, groups, shared, mask_seed);
    if (*impute) return cmd_impute(common, input, out_dir, band, truth);
    if (*forecast) return cmd_forecast(common, input, out_dir, history, band, truth);
    if (*run) return cmd_run(common, input, out_dir, band, truth, timing, window_dir);
    if (*eval) return cmd_eval(truth, input, mask_path, kind, output);
    if (*syn) return cmd_synth(synth, output, out_mask);
    if (*sweep) return cmd_sweep(common, input, output, ranks, scenarios, block, groups, mask_seed);
  } catch (const Error& e) {
    const int code = exit_code_for(e.kind());
    report_failure(std::cerr, to_string(e.kind()), code, e.what());
    return code;
  } catch (const fs::filesystem_error& e) {
    report_failure(std::cerr, "data_error", data, e.what());
    return data;
  } catch (const std::exception& e) {
    report_failure(std::cerr, "internal", numerical, e.what());
    return numerical;
  }
  return usage;
}

}  // namespace btmf::cli
