#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "btmf/error.hpp"
#include "btmf/forecast.hpp"
#include "btmf/gibbs.hpp"
#include "btmf/model.hpp"

namespace btmf {

enum class WindowStage { dynamic, fixed };

inline std::string_view to_string(WindowStage stage) {
  return stage == WindowStage::dynamic ? "dynamic" : "fixed";
}

/// Half-open column range [start, end).
struct Window {
  Index start = 0;
  Index end = 0;
  WindowStage stage = WindowStage::dynamic;

  Index length() const noexcept { return end - start; }
  bool contains(Index column) const noexcept { return start <= column && column < end; }
};

struct WindowPlan {
  std::vector<Window> windows;
  Index increment = 0;  // I
  Index critical = 0;   // T1
  Index total = 0;      // T_total
};

/// Two-stage schedule: growing windows [0, wI) for w = 1..T1/I, then
/// sliding windows [(w - T1/I) I, wI). A trailing remainder of
/// T_total mod I columns gets one shortened final window ending at T_total.
inline WindowPlan plan_windows(Index total, Index increment, Index critical) {
  require(increment >= 1, ErrorKind::config, "window increment must be at least 1");
  require(critical >= increment && critical % increment == 0, ErrorKind::config,
          "critical length " + std::to_string(critical) + " must be a positive multiple of the increment " +
              std::to_string(increment));
  require(total >= increment, ErrorKind::config, "total length shorter than one increment");

  WindowPlan plan{{}, increment, critical, total};
  const Index n_dynamic = critical / increment;
  const Index n_full = total / increment;
  auto window_for = [&](Index w, Index end) {
    return w <= n_dynamic ? Window{0, end, WindowStage::dynamic}
                          : Window{(w - n_dynamic) * increment, end, WindowStage::fixed};
  };
  for (Index w = 1; w <= n_full; ++w) plan.windows.push_back(window_for(w, w * increment));
  if (total % increment != 0) plan.windows.push_back(window_for(n_full + 1, total));
  return plan;
}

/// Merges overlapping window imputations with equal weight per window.
class ImputationAccumulator {
 public:
  ImputationAccumulator(Index channels, Index total)
      : sum_(MatrixXd::Zero(channels, total)), second_(MatrixXd::Zero(channels, total)),
        last_std_(MatrixXd::Zero(channels, total)), count_(Eigen::MatrixXi::Zero(channels, total)) {}

  /// Adds a window result whose column 0 sits at `start`.
  void add(Index start, const PredictionResult& window) {
    const Index len = window.mean.cols();
    require(start >= 0 && start + len <= sum_.cols() && window.mean.rows() == sum_.rows(),
            ErrorKind::shape, "window result does not fit the accumulator");
    sum_.middleCols(start, len) += window.mean;
    second_.middleCols(start, len).array() +=
        window.mean.array().square() + window.std.array().square();
    last_std_.middleCols(start, len) = window.std;
    count_.middleCols(start, len).array() += 1;
  }

  const MatrixXd& sum() const noexcept { return sum_; }
  const Eigen::MatrixXi& count() const noexcept { return count_; }

  /// Mean sum / count; std of the equal-weight mixture of window posteriors.
  /// Entries covered once keep that window's std as is. Entries never
  /// covered are NaN.
  PredictionResult merged(Index n_samples, Index first_column = 0) const {
    PredictionResult out;
    out.kind = PredictionKind::imputation;
    out.n_samples = n_samples;
    out.first_column = first_column;
    out.mean.resize(sum_.rows(), sum_.cols());
    out.std.resize(sum_.rows(), sum_.cols());
    for (Index t = 0; t < sum_.cols(); ++t)
      for (Index i = 0; i < sum_.rows(); ++i) {
        const int c = count_(i, t);
        if (c == 0) {
          out.mean(i, t) = out.std(i, t) = std::numeric_limits<double>::quiet_NaN();
          continue;
        }
        const double mu = sum_(i, t) / c;
        out.mean(i, t) = mu;
        out.std(i, t) = c == 1 ? last_std_(i, t) : std::sqrt(std::max(0.0, second_(i, t) / c - mu * mu));
      }
    return out;
  }

 private:
  MatrixXd sum_;
  MatrixXd second_;
  MatrixXd last_std_;
  Eigen::MatrixXi count_;
};

/// Random streams for window w of a run seeded with `root`. Standalone
/// imputation uses the streams of window 0.
struct WindowStreams {
  RandomSource init;
  RandomSource chain;
  RandomSource forecast;
};

inline WindowStreams window_streams(const RandomSource& root, Index window_index) {
  const RandomSource w = root.split(static_cast<std::uint64_t>(window_index));
  return WindowStreams{w.split(0), w.split(1), w.split(2)};
}

struct IncrementalConfig {
  Index rank = 8;
  std::vector<int> lags{1, 2};
  PriorConfig prior;
  ChainConfig chain;
  Index horizon = 0;  // columns forecast past the end of the data
  PrecisionScope precision_scope = PrecisionScope::window;
};

/// The configured prior, or the defaults for (rank, order) when none was set.
inline PriorConfig resolved_prior(const IncrementalConfig& config) {
  if (config.prior.rank() == 0)
    return PriorConfig::defaults(config.rank, static_cast<Index>(config.lags.size()));
  require(config.prior.rank() == config.rank, ErrorKind::config,
          "prior rank " + std::to_string(config.prior.rank()) + " does not match rank " +
              std::to_string(config.rank));
  return config.prior;
}

/// Single-window imputation with the streams the incremental pipeline gives
/// its first window.
inline ImputationOutcome run_standalone_imputation(const ObservationSet& obs,
                                                   const IncrementalConfig& config,
                                                   const RandomSource& rng,
                                                   const IterationObserver& observer = {}) {
  const WindowStreams streams = window_streams(rng, 0);
  const FactorState init = random_factor_state(config.rank, obs.channels(), obs.length(), streams.init);
  return run_imputation_chain(obs, init, config.lags, resolved_prior(config), config.chain,
                              streams.chain, observer);
}

struct ProgressEvent {
  Index window = 0;
  WindowStage stage = WindowStage::dynamic;
  Index iteration = 0;
  double rmse_observed = 0.0;
};

struct WindowReport {
  Index index = 0;
  Window window;
  const ImputationOutcome* imputation = nullptr;
  const RollingForecastOutcome* forecast = nullptr;  // null when nothing follows the window
  double seconds = 0.0;
};

struct IncrementalObservers {
  std::function<void(const ProgressEvent&)> progress;
  std::function<void(const WindowReport&)> window;
};

struct IncrementalOutcome {
  PredictionResult imputation;  // columns [0, T_total)
  PredictionResult forecast;    // columns [I, T_total + horizon)
  Eigen::MatrixXi coverage;
  std::vector<double> window_seconds;
};

/// Missing-everywhere continuation of `obs` for forecasting past its end.
inline ObservationSet empty_continuation(const ObservationSet& obs, Index columns) {
  ObservationSet out;
  out.values = MatrixXd::Constant(obs.channels(), columns, std::numeric_limits<double>::quiet_NaN());
  out.mask = Mask::Zero(obs.channels(), columns);
  out.channel_ids = obs.channel_ids;
  out.channel_groups = obs.channel_groups;
  out.sample_interval = obs.sample_interval;
  out.start = obs.time_of(obs.length());
  out.first_column = obs.first_column + obs.length();
  return out;
}

/// Incremental pipeline over a window plan.
///
/// Dynamic windows warm-start U and draw a fresh X; fixed windows also keep
/// the overlapping part of X (shifted by I columns) and draw the new tail.
/// After imputing, each window forecasts the following columns up to the
/// next window end (the last one forecasts `horizon` columns past the data)
/// and the forecasting pass's U and tau_eps carry into the next window.
inline IncrementalOutcome run_incremental(const ObservationSet& obs, const WindowPlan& plan,
                                          const IncrementalConfig& config, const RandomSource& rng,
                                          const IncrementalObservers& observers = {}) {
  obs.validate();
  require(plan.total == obs.length(), ErrorKind::config,
          "window plan covers " + std::to_string(plan.total) + " columns but data has " +
              std::to_string(obs.length()));
  require(config.horizon >= 0, ErrorKind::config, "horizon must be non-negative");
  const Index k = config.rank;
  const Index m = obs.channels();
  const Index total = obs.length();
  const Index inc = plan.increment;
  const PriorConfig prior = resolved_prior(config);

  ImputationAccumulator acc(m, total);
  const Index forecast_cols = total - inc + config.horizon;
  MatrixXd f_mean = MatrixXd::Constant(m, forecast_cols, std::numeric_limits<double>::quiet_NaN());
  MatrixXd f_std = f_mean;
  IncrementalOutcome out;

  FactorState carried;
  Window previous{};
  for (std::size_t wi = 0; wi < plan.windows.size(); ++wi) {
    const Window& win = plan.windows[wi];
    const auto idx = static_cast<Index>(wi);
    const auto started = std::chrono::steady_clock::now();
    try {
      const WindowStreams streams_w = window_streams(rng, idx);
      const ObservationSet window_obs = obs.slice(win.start, win.end);

      FactorState init;
      if (wi == 0) {
        init = random_factor_state(k, m, win.length(), streams_w.init);
      } else {
        init.U = carried.U;
        init.tau_eps = carried.tau_eps;
        if (win.stage == WindowStage::dynamic) {
          init.X = random_temporal_factors(k, win.length(), streams_w.init.split(1));
        } else {
          init.X.resize(k, win.length());
          const Index overlap_end = std::min(previous.end, win.end);
          const Index overlap = std::max<Index>(0, overlap_end - win.start);
          if (overlap > 0)
            init.X.leftCols(overlap) = carried.X.middleCols(win.start - previous.start, overlap);
          if (win.length() > overlap)
            init.X.rightCols(win.length() - overlap) =
                random_temporal_factors(k, win.length() - overlap, streams_w.init.split(1));
        }
      }

      IterationObserver iteration_observer;
      if (observers.progress) {
        iteration_observer = [&](const IterationEvent& ev) {
          observers.progress(ProgressEvent{idx, win.stage, ev.iteration, ev.rmse_observed});
        };
      }
      const ImputationOutcome imputed = run_imputation_chain(
          window_obs, init, config.lags, prior, config.chain, streams_w.chain,
          iteration_observer);
      acc.add(win.start, imputed.prediction);

      carried = imputed.state;
      const bool last = wi + 1 == plan.windows.size();
      const Index f_end = last ? total + config.horizon : std::min(win.end + inc, total);
      RollingForecastOutcome forecasted;
      const bool has_forecast = f_end > win.end;
      if (has_forecast) {
        ObservationSet incoming = win.end < total ? obs.slice(win.end, std::min(f_end, total))
                                                  : empty_continuation(obs, 0);
        if (f_end > total) {
          const ObservationSet beyond = empty_continuation(obs, f_end - total);
          incoming = win.end < total ? concat_columns(incoming, beyond) : beyond;
        }
        forecasted = rolling_forecast(window_obs, imputed.state, imputed.ar, incoming,
                                      prior, config.chain,
                                      ForecastOptions{inc, config.precision_scope},
                                      streams_w.forecast);
        const Index offset = win.end - inc;
        f_mean.middleCols(offset, forecasted.forecast.mean.cols()) = forecasted.forecast.mean;
        f_std.middleCols(offset, forecasted.forecast.std.cols()) = forecasted.forecast.std;
        carried.U = forecasted.state.U;
        carried.tau_eps = forecasted.state.tau_eps;
      }
      previous = win;

      const double seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
      out.window_seconds.push_back(seconds);
      if (observers.window)
        observers.window(
            WindowReport{idx, win, &imputed, has_forecast ? &forecasted : nullptr, seconds});
    } catch (const Error& e) {
      throw e.with_context("window " + std::to_string(idx + 1));
    }
  }

  const Index samples = config.chain.n_iters_impute - config.chain.burn_in_impute;
  out.imputation = acc.merged(samples, obs.first_column);
  out.coverage = acc.count();
  out.forecast = PredictionResult{f_mean, f_std,
                                  config.chain.n_iters_forecast - config.chain.burn_in_forecast,
                                  PredictionKind::forecast, obs.first_column + inc};
  return out;
}

}  // namespace btmf
