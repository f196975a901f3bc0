#pragma once

// Closed-form conditional posterior parameters. Everything here is a pure
// function of its inputs; the samplers in gibbs.hpp and forecast.hpp draw from
// the distributions these describe.

#include <string>
#include <vector>

#include "btmf/error.hpp"
#include "btmf/linalg.hpp"
#include "btmf/model.hpp"

namespace btmf {

/// Gaussian in information form: N(mean, precision^-1).
struct GaussianConditional {
  MatrixXd precision;
  VectorXd mean;
};

/// Gaussian-Wishart posterior over (mu_u, Lambda_u).
struct GaussianWishartPosterior {
  VectorXd mu;      // mu0*
  double beta = 0;  // beta0*
  MatrixXd W_inv;   // (W0*)^-1
  double dof = 0;   // v0*
  VectorXd u_bar;
  MatrixXd S_bar;
};

inline GaussianWishartPosterior spatial_hyper_posterior(const MatrixXd& U, const PriorConfig& prior) {
  const Index m = U.cols();
  require(m >= 1, ErrorKind::invalid_parameter, "spatial hyper-parameters need at least one channel");
  require(U.rows() == prior.rank(), ErrorKind::shape, "U rank does not match prior");
  const double md = static_cast<double>(m);

  GaussianWishartPosterior post;
  post.u_bar = U.rowwise().mean();
  const MatrixXd centered = U.colwise() - post.u_bar;
  post.S_bar = centered * centered.transpose() / md;
  post.beta = prior.beta0 + md;
  post.dof = prior.v0 + md;
  post.mu = (prior.beta0 * prior.mu0 + md * post.u_bar) / post.beta;
  const VectorXd diff = prior.mu0 - post.u_bar;
  post.W_inv = spd_inverse(prior.W0, "W0") + md * post.S_bar +
               (prior.beta0 * md / post.beta) * diff * diff.transpose();
  post.W_inv = symmetrized(post.W_inv);
  return post;
}

/// Conditional of u_i; sums run over observed time stamps of row i only.
inline GaussianConditional spatial_factor_posterior(Index i, const ObservationSet& obs,
                                                    const MatrixXd& X, const SpatialHyperState& hyper,
                                                    double tau_eps) {
  require(X.cols() == obs.length(), ErrorKind::shape, "X length does not match observations");
  const Index k = X.rows();
  MatrixXd gram = MatrixXd::Zero(k, k);
  VectorXd cross = VectorXd::Zero(k);
  for (Index t = 0; t < obs.length(); ++t) {
    if (!obs.observed(i, t)) continue;
    gram.selfadjointView<Eigen::Lower>().rankUpdate(X.col(t));
    cross += X.col(t) * obs.values(i, t);
  }
  GaussianConditional post;
  post.precision = hyper.Lambda_u;
  post.precision += tau_eps * MatrixXd(gram.selfadjointView<Eigen::Lower>());
  const VectorXd rhs = tau_eps * cross + hyper.Lambda_u * hyper.mu_u;
  post.mean = cholesky_solve(cholesky_lower(post.precision, "spatial factor precision"), rhs);
  return post;
}

/// Matrix-Normal Inverse-Wishart posterior over (A, Sigma).
struct MniwPosterior {
  MatrixXd V;       // V0*
  MatrixXd Lambda;  // Lambda0*
  MatrixXd Psi;     // Psi0*
  double dof = 0;   // v0*
};

/// Regression design for the AR process. Row r of `targets` is x_{l_d + r}^T
/// and row r of `regressors` is z_{l_d + r}^T (0-based columns); both have
/// T - l_d rows.
struct ArDesign {
  MatrixXd targets;     // P
  MatrixXd regressors;  // Q
};

inline ArDesign ar_design(const MatrixXd& X, const std::vector<int>& lags) {
  validate_lags(lags);
  const Index k = X.rows();
  const Index t_len = X.cols();
  const Index max_lag = lags.back();
  require(t_len > max_lag, ErrorKind::insufficient_history,
          "AR hyper-parameters need T > max lag (T = " + std::to_string(t_len) +
              ", max lag = " + std::to_string(max_lag) + ")");
  const Index rows = t_len - max_lag;
  const Index d = static_cast<Index>(lags.size());
  ArDesign design{MatrixXd(rows, k), MatrixXd(rows, k * d)};
  for (Index r = 0; r < rows; ++r) {
    const Index t = max_lag + r;
    design.targets.row(r) = X.col(t).transpose();
    for (Index j = 0; j < d; ++j)
      design.regressors.block(r, j * k, 1, k) = X.col(t - lags[j]).transpose();
  }
  return design;
}

inline MniwPosterior temporal_hyper_posterior(const MatrixXd& X, const std::vector<int>& lags,
                                              const PriorConfig& prior) {
  const ArDesign design = ar_design(X, lags);
  const MatrixXd& P = design.targets;
  const MatrixXd& Q = design.regressors;
  require(prior.V0.rows() == Q.cols() && prior.Lambda0.rows() == Q.cols(), ErrorKind::shape,
          "prior V0 / Lambda0 do not match K d");

  const MatrixXd V0_inv = spd_inverse(prior.V0, "V0");
  MniwPosterior post;
  const MatrixXd V_inv = symmetrized(V0_inv + Q.transpose() * Q);
  post.V = spd_inverse(V_inv, "V0* inverse");
  post.Lambda = post.V * (V0_inv * prior.Lambda0 + Q.transpose() * P);
  post.dof = prior.v0 + static_cast<double>(P.rows());
  post.Psi = prior.Psi0 + P.transpose() * P +
             prior.Lambda0.transpose() * V0_inv * prior.Lambda0 -
             post.Lambda.transpose() * V_inv * post.Lambda;
  post.Psi = symmetrized(post.Psi);
  return post;
}

/// Per-sweep constants of the AR prior derived from (A, Sigma).
struct ArWorkspace {
  std::vector<int> lags;
  Index rank = 0;
  MatrixXd Sigma_inv;
  std::vector<MatrixXd> coeff;             // B_j, applied to x_{t - l_j}
  std::vector<MatrixXd> coeff_t_sinv;      // B_j^T Sigma^-1
  std::vector<MatrixXd> coeff_t_sinv_coeff;  // B_j^T Sigma^-1 B_j

  explicit ArWorkspace(const ARModel& ar, JitterCounter* jitter = nullptr)
      : lags(ar.lags), rank(ar.rank()) {
    ar.validate();
    Sigma_inv = spd_inverse(ar.Sigma, "Sigma", jitter);
    for (Index j = 0; j < ar.order(); ++j) {
      coeff.push_back(ar.coefficient(j));
      coeff_t_sinv.push_back(coeff.back().transpose() * Sigma_inv);
      coeff_t_sinv_coeff.push_back(coeff_t_sinv.back() * coeff.back());
    }
  }

  Index order() const noexcept { return static_cast<Index>(lags.size()); }
  int max_lag() const { return lags.back(); }
};

/// Auxiliary terms of the x_t conditional: C, E from the AR transitions in
/// which x_t is a regressor; D, F from the transition (or N(0, I) start) that
/// generates x_t; plus the observation terms.
struct TemporalFactorTerms {
  MatrixXd C, D;
  VectorXd E, F;
  MatrixXd obs_precision;  // tau sum_{i observed} u_i u_i^T
  VectorXd obs_rhs;        // tau sum_{i observed} u_i y_it
};

/// Terms for 0-based column t. Which observations count is given by
/// `obs.mask`; X supplies the neighbouring factors.
inline TemporalFactorTerms temporal_factor_terms(Index t, const ObservationSet& obs, const MatrixXd& U,
                                                 const MatrixXd& X, const ArWorkspace& ar,
                                                 double tau_eps) {
  const Index k = ar.rank;
  const Index t_len = X.cols();
  const Index max_lag = ar.max_lag();
  const Index d = ar.order();
  require(0 <= t && t < t_len, ErrorKind::out_of_range, "time index out of range");

  TemporalFactorTerms terms{MatrixXd::Zero(k, k), MatrixXd::Zero(k, k), VectorXd::Zero(k),
                            VectorXd::Zero(k), MatrixXd::Zero(k, k), VectorXd::Zero(k)};

  for (Index j = 0; j < d; ++j) {
    const Index s = t + ar.lags[j];
    if (s < max_lag || s >= t_len) continue;
    VectorXd phi = X.col(s);
    for (Index p = 0; p < d; ++p)
      if (p != j) phi.noalias() -= ar.coeff[p] * X.col(s - ar.lags[p]);
    terms.C += ar.coeff_t_sinv_coeff[j];
    terms.E.noalias() += ar.coeff_t_sinv[j] * phi;
  }

  if (t < max_lag) {
    terms.D.setIdentity();
  } else {
    terms.D = ar.Sigma_inv;
    VectorXd prior_mean = VectorXd::Zero(k);
    for (Index p = 0; p < d; ++p) prior_mean.noalias() += ar.coeff[p] * X.col(t - ar.lags[p]);
    terms.F = ar.Sigma_inv * prior_mean;
  }

  for (Index i = 0; i < obs.channels(); ++i) {
    if (!obs.observed(i, t)) continue;
    terms.obs_precision.selfadjointView<Eigen::Lower>().rankUpdate(U.col(i), tau_eps);
    terms.obs_rhs += (tau_eps * obs.values(i, t)) * U.col(i);
  }
  terms.obs_precision = MatrixXd(terms.obs_precision.selfadjointView<Eigen::Lower>());
  return terms;
}

inline GaussianConditional temporal_factor_posterior(const TemporalFactorTerms& terms) {
  GaussianConditional post;
  post.precision = symmetrized(terms.obs_precision + terms.C + terms.D);
  post.mean = cholesky_solve(cholesky_lower(post.precision, "temporal factor precision"),
                             terms.obs_rhs + terms.E + terms.F);
  return post;
}

struct GammaPosterior {
  double shape = 0;
  double rate = 0;
};

/// Sum of squared residuals and count over observed cells of columns [begin, end).
struct ResidualSummary {
  double sum_sq = 0.0;
  Index count = 0;
};

inline ResidualSummary observed_residuals(const ObservationSet& obs, const MatrixXd& U,
                                          const MatrixXd& X, Index begin, Index end) {
  ResidualSummary out;
  for (Index t = begin; t < end; ++t) {
    for (Index i = 0; i < obs.channels(); ++i) {
      if (!obs.observed(i, t)) continue;
      const double r = obs.values(i, t) - U.col(i).dot(X.col(t));
      out.sum_sq += r * r;
      ++out.count;
    }
  }
  return out;
}

inline GammaPosterior precision_posterior(const ResidualSummary& residuals, const PriorConfig& prior) {
  return GammaPosterior{prior.a0 + 0.5 * static_cast<double>(residuals.count),
                        prior.b0 + 0.5 * residuals.sum_sq};
}

inline GammaPosterior precision_posterior(const ObservationSet& obs, const MatrixXd& U,
                                          const MatrixXd& X, const PriorConfig& prior) {
  require(U.cols() == obs.channels() && X.cols() == obs.length(), ErrorKind::shape,
          "factor shapes do not match observations");
  return precision_posterior(observed_residuals(obs, U, X, 0, obs.length()), prior);
}

/// Inverse-Wishart parameters for the forecasting innovation covariance:
/// Psi0 + r r^T with r = x_t - A^T z_t, and v0 + 1 degrees of freedom.
struct InverseWishartParams {
  MatrixXd Psi;
  double dof = 0;
};

inline InverseWishartParams innovation_posterior(const VectorXd& x_t, const VectorXd& ar_mean_t,
                                                 const PriorConfig& prior) {
  const VectorXd residual = x_t - ar_mean_t;
  return InverseWishartParams{symmetrized(prior.Psi0 + residual * residual.transpose()),
                              prior.v0 + 1.0};
}

/// Conditional of the newest temporal factor given its column of data (only
/// observed entries count) and the AR prior N(ar_mean, Sigma_tilde).
inline GaussianConditional current_factor_posterior(const VectorXd& y_col, const Mask& mask_col,
                                                    const MatrixXd& U, const VectorXd& ar_mean_t,
                                                    const MatrixXd& sigma_tilde, double tau_eps,
                                                    JitterCounter* jitter = nullptr) {
  const Index k = U.rows();
  require(y_col.size() == U.cols() && mask_col.size() == U.cols(), ErrorKind::shape,
          "column length does not match U");
  const MatrixXd sigma_inv = spd_inverse(sigma_tilde, "forecast Sigma_tilde", jitter);
  MatrixXd precision = sigma_inv;
  VectorXd rhs = sigma_inv * ar_mean_t;
  MatrixXd gram = MatrixXd::Zero(k, k);
  for (Index i = 0; i < U.cols(); ++i) {
    if (!mask_col(i)) continue;
    gram.selfadjointView<Eigen::Lower>().rankUpdate(U.col(i), tau_eps);
    rhs += (tau_eps * y_col(i)) * U.col(i);
  }
  precision += MatrixXd(gram.selfadjointView<Eigen::Lower>());
  GaussianConditional post;
  post.precision = symmetrized(precision);
  post.mean = cholesky_solve(cholesky_lower(post.precision, "forecast factor precision", jitter), rhs);
  return post;
}

}  // namespace btmf
