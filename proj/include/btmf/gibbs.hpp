#pragma once

#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <string>
#include <vector>

#include "btmf/distributions.hpp"
#include "btmf/error.hpp"
#include "btmf/model.hpp"
#include "btmf/posterior.hpp"
#include "btmf/random.hpp"

namespace btmf {

struct ChainConfig {
  Index n_iters_impute = 200;
  Index burn_in_impute = 100;
  Index n_iters_forecast = 20;
  Index burn_in_forecast = 10;
  std::uint64_t seed = 0;
  int threads = 1;

  void validate() const {
    require(0 <= burn_in_impute && burn_in_impute < n_iters_impute, ErrorKind::invalid_parameter,
            "imputation chain needs 0 <= burn_in < n_iters");
    require(0 <= burn_in_forecast && burn_in_forecast < n_iters_forecast,
            ErrorKind::invalid_parameter, "forecast chain needs 0 <= burn_in < n_iters");
    require(threads >= 1, ErrorKind::invalid_parameter, "threads must be at least 1");
  }
};

// Sub-stream ids used inside one Gibbs sweep.
namespace streams {
constexpr std::uint64_t spatial_hyper = 0;
constexpr std::uint64_t spatial_factors = 1;
constexpr std::uint64_t temporal_hyper = 2;
constexpr std::uint64_t temporal_factors = 3;
constexpr std::uint64_t precision = 4;
}  // namespace streams

/// Lambda_u ~ W(W0*, v0*), then mu_u ~ N(mu0*, (beta0* Lambda_u)^-1).
inline SpatialHyperState sample_spatial_hyperparams(const MatrixXd& U, const PriorConfig& prior,
                                                    RandomSource& rng,
                                                    JitterCounter* jitter = nullptr) {
  const GaussianWishartPosterior post = spatial_hyper_posterior(U, prior);
  SpatialHyperState hyper;
  const MatrixXd W = spd_inverse(post.W_inv, "(W0*)^-1", jitter);
  hyper.Lambda_u = sample_wishart(W, post.dof, rng, jitter);
  hyper.mu_u = sample_mvn_precision(post.mu, post.beta * hyper.Lambda_u, rng,
                                    "beta0* Lambda_u", jitter);
  return hyper;
}

inline VectorXd sample_spatial_factor(Index i, const ObservationSet& obs, const MatrixXd& X,
                                      const SpatialHyperState& hyper, double tau_eps,
                                      RandomSource& rng, JitterCounter* jitter = nullptr) {
  const GaussianConditional post = spatial_factor_posterior(i, obs, X, hyper, tau_eps);
  return sample_mvn_precision(post.mean, post.precision, rng, "Lambda_u*", jitter);
}

/// Redraws every column of U. Channel i uses stream `rng.split(i)`.
inline void sample_spatial_factors(MatrixXd& U, const ObservationSet& obs, const MatrixXd& X,
                                   const SpatialHyperState& hyper, double tau_eps,
                                   const RandomSource& rng, int threads,
                                   JitterCounter* jitter = nullptr) {
  const Index m = obs.channels();
  std::vector<std::exception_ptr> failures(static_cast<std::size_t>(m));
#pragma omp parallel for num_threads(threads) schedule(static)
  for (Index i = 0; i < m; ++i) {
    try {
      RandomSource channel_rng = rng.split(static_cast<std::uint64_t>(i));
      U.col(i) = sample_spatial_factor(i, obs, X, hyper, tau_eps, channel_rng, jitter);
    } catch (...) {
      failures[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& failure : failures)
    if (failure) std::rethrow_exception(failure);
}

/// Sigma ~ IW(Psi0*, v0*), then A ~ MN(Lambda0*, V0*, Sigma).
inline ARModel sample_temporal_hyperparams(const MatrixXd& X, const std::vector<int>& lags,
                                           const PriorConfig& prior, RandomSource& rng,
                                           JitterCounter* jitter = nullptr) {
  const MniwPosterior post = temporal_hyper_posterior(X, lags, prior);
  ARModel ar;
  ar.lags = lags;
  ar.Sigma = sample_inverse_wishart(post.Psi, post.dof, rng, jitter);
  ar.A = sample_matrix_normal(post.Lambda, post.V, ar.Sigma, rng, jitter);
  return ar;
}

inline VectorXd sample_temporal_factor(Index t, const ObservationSet& obs, const MatrixXd& U,
                                       const MatrixXd& X, const ArWorkspace& ar, double tau_eps,
                                       RandomSource& rng, JitterCounter* jitter = nullptr) {
  const GaussianConditional post =
      temporal_factor_posterior(temporal_factor_terms(t, obs, U, X, ar, tau_eps));
  return sample_mvn_precision(post.mean, post.precision, rng, "Sigma_x* inverse", jitter);
}

/// Sequential sweep over t = 0..T-1; each draw sees the already-updated
/// earlier columns.
inline void sample_temporal_factors(MatrixXd& X, const ObservationSet& obs, const MatrixXd& U,
                                    const ARModel& ar, double tau_eps, RandomSource& rng,
                                    JitterCounter* jitter = nullptr) {
  const ArWorkspace workspace(ar, jitter);
  for (Index t = 0; t < X.cols(); ++t)
    X.col(t) = sample_temporal_factor(t, obs, U, X, workspace, tau_eps, rng, jitter);
}

inline double sample_precision(const ObservationSet& obs, const MatrixXd& U, const MatrixXd& X,
                               const PriorConfig& prior, RandomSource& rng) {
  const GammaPosterior post = precision_posterior(obs, U, X, prior);
  return sample_gamma(post.shape, post.rate, rng);
}

/// Random start: U and X entries i.i.d. N(0, 1) * scale, tau_eps = 1.
inline FactorState random_factor_state(Index rank, Index channels, Index length, RandomSource rng,
                                       double scale = 0.1) {
  FactorState state;
  RandomSource u_rng = rng.split(0);
  RandomSource x_rng = rng.split(1);
  state.U = scale * standard_normal_matrix(rank, channels, u_rng);
  state.X = scale * standard_normal_matrix(rank, length, x_rng);
  state.tau_eps = 1.0;
  return state;
}

inline MatrixXd random_temporal_factors(Index rank, Index length, RandomSource rng,
                                        double scale = 0.1) {
  return scale * standard_normal_matrix(rank, length, rng);
}

struct IterationEvent {
  Index iteration = 0;
  double rmse_observed = 0.0;
  double tau_eps = 0.0;
};

using IterationObserver = std::function<void(const IterationEvent&)>;

struct ImputationOutcome {
  FactorState state;
  ARModel ar;
  SpatialHyperState hyper;
  PredictionResult prediction;
  std::size_t jitter_events = 0;
};

/// Imputation chain. Each sweep draws, in order: spatial hyper-parameters,
/// all u_i, (A, Sigma), all x_t, tau_eps. From iteration index burn_in on
/// (0-based) the reconstruction U^T X is accumulated at every entry.
inline ImputationOutcome run_imputation_chain(const ObservationSet& obs, const FactorState& init,
                                              const std::vector<int>& lags,
                                              const PriorConfig& prior, const ChainConfig& chain,
                                              const RandomSource& rng,
                                              const IterationObserver& observer = {}) {
  validate_lags(lags);
  chain.validate();
  init.validate(obs.channels(), obs.length());
  prior.validate(static_cast<Index>(lags.size()));
  require(prior.rank() == init.rank(), ErrorKind::shape, "prior rank does not match factors");
  require(obs.length() > lags.back(), ErrorKind::insufficient_history,
          "window of " + std::to_string(obs.length()) + " columns is not longer than max lag " +
              std::to_string(lags.back()));

  JitterCounter jitter;
  ImputationOutcome out;
  out.state = init;
  RunningMoments moments(obs.channels(), obs.length());
  FactorState& st = out.state;

  for (Index n = 0; n < chain.n_iters_impute; ++n) {
    try {
      const RandomSource sweep = rng.split(static_cast<std::uint64_t>(n));
      RandomSource hyper_rng = sweep.split(streams::spatial_hyper);
      out.hyper = sample_spatial_hyperparams(st.U, prior, hyper_rng, &jitter);
      sample_spatial_factors(st.U, obs, st.X, out.hyper, st.tau_eps,
                             sweep.split(streams::spatial_factors), chain.threads, &jitter);
      RandomSource ar_rng = sweep.split(streams::temporal_hyper);
      out.ar = sample_temporal_hyperparams(st.X, lags, prior, ar_rng, &jitter);
      RandomSource x_rng = sweep.split(streams::temporal_factors);
      sample_temporal_factors(st.X, obs, st.U, out.ar, st.tau_eps, x_rng, &jitter);

      const ResidualSummary residuals = observed_residuals(obs, st.U, st.X, 0, obs.length());
      const GammaPosterior tau_post = precision_posterior(residuals, prior);
      RandomSource tau_rng = sweep.split(streams::precision);
      st.tau_eps = sample_gamma(tau_post.shape, tau_post.rate, tau_rng);

      if (n >= chain.burn_in_impute) moments.add(reconstruct(st));
      if (observer) {
        const double rmse = residuals.count > 0
                                ? std::sqrt(residuals.sum_sq / static_cast<double>(residuals.count))
                                : 0.0;
        observer(IterationEvent{n, rmse, st.tau_eps});
      }
    } catch (const Error& e) {
      throw e.with_context("iteration " + std::to_string(n));
    }
  }
  out.prediction = moments.result(PredictionKind::imputation, obs.first_column);
  out.jitter_events = jitter.events();
  return out;
}

}  // namespace btmf
