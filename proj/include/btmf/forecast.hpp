#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "btmf/distributions.hpp"
#include "btmf/gibbs.hpp"
#include "btmf/model.hpp"
#include "btmf/posterior.hpp"
#include "btmf/random.hpp"

namespace btmf {

/// Draws Sigma_tilde with Sigma_tilde^-1 ~ W((Psi0 + r r^T)^-1, v0 + 1),
/// r = x_t - A^T z_t.
inline MatrixXd update_innovation_covariance(const VectorXd& x_t, const ARModel& ar,
                                             const VectorXd& z_t, const PriorConfig& prior,
                                             RandomSource& rng, JitterCounter* jitter = nullptr) {
  require(z_t.size() == ar.A.rows(), ErrorKind::shape, "z_t length does not match A");
  const InverseWishartParams params = innovation_posterior(x_t, ar.A.transpose() * z_t, prior);
  return sample_inverse_wishart(params.Psi, params.dof, rng, jitter);
}

/// Draw of the newest temporal factor. With no observed entry the draw is
/// straight from the AR prior N(ar_mean, Sigma_tilde).
inline VectorXd sample_current_temporal_factor(const VectorXd& y_col, const Mask& mask_col,
                                               const MatrixXd& U, const VectorXd& ar_mean_t,
                                               const MatrixXd& sigma_tilde, double tau_eps,
                                               RandomSource& rng, JitterCounter* jitter = nullptr) {
  if (mask_col.cast<Index>().sum() == 0) return sample_mvn(ar_mean_t, sigma_tilde, rng, jitter);
  const GaussianConditional post =
      current_factor_posterior(y_col, mask_col, U, ar_mean_t, sigma_tilde, tau_eps, jitter);
  return sample_mvn_precision(post.mean, post.precision, rng, "forecast factor precision", jitter);
}

struct ForecastStep {
  VectorXd mean;    // per channel
  VectorXd std;     // per channel
  VectorXd x_next;  // last sampled x_{t+1}
};

/// One-step-ahead forecast for the column just past `history`.
///
/// The point forecast collected each post-burn-in iteration is U^T (A^T z),
/// so with U fixed its mean is exactly that value. The reported spread is
/// that of U^T x_{t+1} over the sampled factors x_{t+1} ~ N(A^T z, Sigma_tilde).
inline ForecastStep forecast_step(const MatrixXd& U, const ARModel& ar, const MatrixXd& history,
                                  const PriorConfig& prior, const RandomSource& rng, Index n_iters,
                                  Index burn_in, JitterCounter* jitter = nullptr) {
  require(0 <= burn_in && burn_in < n_iters, ErrorKind::invalid_parameter,
          "forecast chain needs 0 <= burn_in < n_iters");
  require(history.cols() >= ar.max_lag(), ErrorKind::insufficient_history,
          "forecast history has " + std::to_string(history.cols()) +
              " columns but max lag is " + std::to_string(ar.max_lag()));
  const VectorXd z = lagged_stack(ar.lags, history, history.cols());
  const VectorXd ar_mean_next = ar.A.transpose() * z;
  const VectorXd point = U.transpose() * ar_mean_next;

  RunningMoments point_moments(U.cols(), 1);
  RunningMoments spread_moments(U.cols(), 1);
  VectorXd x = ar_mean_next;
  for (Index n = 0; n < n_iters; ++n) {
    RandomSource it = rng.split(static_cast<std::uint64_t>(n));
    const MatrixXd sigma_tilde = update_innovation_covariance(x, ar, z, prior, it, jitter);
    x = sample_mvn(ar_mean_next, sigma_tilde, it, jitter);
    if (n >= burn_in) {
      point_moments.add(point);
      spread_moments.add(U.transpose() * x);
    }
  }
  return ForecastStep{point_moments.mean(), spread_moments.std(), x};
}

/// Which observations feed tau_eps while forecasting.
enum class PrecisionScope { window, column };

struct ForecastOptions {
  Index refresh_interval = 0;  // resample U every I steps; 0 disables
  PrecisionScope precision_scope = PrecisionScope::window;
};

struct RollingForecastOutcome {
  PredictionResult forecast;  // M x horizon
  FactorState state;          // U (refreshed or not), X over window + ingested columns, tau
  SpatialHyperState hyper;
};

/// Concatenates two sets with identical channels along time.
inline ObservationSet concat_columns(const ObservationSet& head, const ObservationSet& tail) {
  require(head.channels() == tail.channels(), ErrorKind::shape, "channel counts differ");
  ObservationSet out = head;
  const Index t0 = head.length();
  out.values.conservativeResize(Eigen::NoChange, t0 + tail.length());
  out.mask.conservativeResize(Eigen::NoChange, t0 + tail.length());
  out.values.rightCols(tail.length()) = tail.values;
  out.mask.rightCols(tail.length()) = tail.mask;
  return out;
}

/// Rolling forecast over the columns of `incoming`, which follow `window`
/// directly.
///
/// For each step s = 1..horizon: forecast column t+s from the current
/// history; then ingest the actual column (any subset may be missing) and
/// condition x_{t+s} on it with the Sigma_tilde / x / tau_eps cycle. On steps
/// where s is a multiple of the refresh interval each conditioning iteration
/// also redraws the spatial hyper-parameters and U over the working window.
/// A and the earlier X columns stay fixed.
inline RollingForecastOutcome rolling_forecast(const ObservationSet& window, const FactorState& state,
                                               const ARModel& ar, const ObservationSet& incoming,
                                               const PriorConfig& prior, const ChainConfig& chain,
                                               const ForecastOptions& options,
                                               const RandomSource& rng) {
  chain.validate();
  ar.validate();
  state.validate(window.channels(), window.length());
  const Index horizon = incoming.length();
  require(horizon >= 1, ErrorKind::invalid_parameter, "forecast horizon must be at least 1");
  require(window.length() >= ar.max_lag(), ErrorKind::insufficient_history,
          "window shorter than max lag");

  JitterCounter jitter;
  const Index t0 = window.length();
  const Index m = window.channels();
  const ObservationSet work = concat_columns(window, incoming);

  RollingForecastOutcome out;
  out.state = state;
  MatrixXd& U = out.state.U;
  MatrixXd& X = out.state.X;
  X.conservativeResize(Eigen::NoChange, t0 + horizon);
  X.rightCols(horizon).setZero();
  double& tau = out.state.tau_eps;

  MatrixXd mean(m, horizon), stdev(m, horizon);

  ResidualSummary committed = observed_residuals(work, U, X, 0, t0);

  for (Index s = 0; s < horizon; ++s) {
    const Index c = t0 + s;
    try {
      const RandomSource step_rng = rng.split(static_cast<std::uint64_t>(s));
      const ForecastStep step = forecast_step(U, ar, X.leftCols(c), prior, step_rng.split(0),
                                              chain.n_iters_forecast, chain.burn_in_forecast,
                                              &jitter);
      mean.col(s) = step.mean;
      stdev.col(s) = step.std;

      const VectorXd z = lagged_stack(ar.lags, X, c);
      const VectorXd ar_mean_c = ar.A.transpose() * z;
      const VectorXd y_col = work.values.col(c);
      const Mask mask_col = work.mask.col(c);
      const bool refresh = options.refresh_interval > 0 && (s + 1) % options.refresh_interval == 0;
      ObservationSet prefix;
      if (refresh) prefix = work.slice(0, c + 1);

      VectorXd x = step.x_next;
      const RandomSource ingest_rng = step_rng.split(1);
      for (Index n = 0; n < chain.n_iters_forecast; ++n) {
        const RandomSource it = ingest_rng.split(static_cast<std::uint64_t>(n));
        if (refresh) {
          X.col(c) = x;
          RandomSource hyper_rng = it.split(streams::spatial_hyper);
          out.hyper = sample_spatial_hyperparams(U, prior, hyper_rng, &jitter);
          sample_spatial_factors(U, prefix, X.leftCols(c + 1), out.hyper, tau,
                                 it.split(streams::spatial_factors), chain.threads, &jitter);
          committed = observed_residuals(work, U, X, 0, c);
        }
        RandomSource sigma_rng = it.split(streams::temporal_hyper);
        const MatrixXd sigma_tilde = update_innovation_covariance(x, ar, z, prior, sigma_rng, &jitter);
        RandomSource x_rng = it.split(streams::temporal_factors);
        x = sample_current_temporal_factor(y_col, mask_col, U, ar_mean_c, sigma_tilde, tau, x_rng,
                                           &jitter);
        X.col(c) = x;
        const ResidualSummary current = observed_residuals(work, U, X, c, c + 1);
        ResidualSummary pooled = current;
        if (options.precision_scope == PrecisionScope::window) {
          pooled.sum_sq += committed.sum_sq;
          pooled.count += committed.count;
        }
        const GammaPosterior tau_post = precision_posterior(pooled, prior);
        RandomSource tau_rng = it.split(streams::precision);
        tau = sample_gamma(tau_post.shape, tau_post.rate, tau_rng);
      }
      X.col(c) = x;
      const ResidualSummary current = observed_residuals(work, U, X, c, c + 1);
      committed.sum_sq += current.sum_sq;
      committed.count += current.count;
    } catch (const Error& e) {
      throw e.with_context("forecast step " + std::to_string(s + 1));
    }
  }

  const Index samples = chain.n_iters_forecast - chain.burn_in_forecast;
  out.forecast = PredictionResult{mean, stdev, samples, PredictionKind::forecast,
                                  window.first_column + t0};
  return out;
}

}  // namespace btmf
