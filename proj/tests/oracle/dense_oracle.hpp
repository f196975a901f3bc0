#pragma once

// Brute-force reference formulas for the conditional posteriors. Each one
// takes a different algebraic route from the library: joint Gaussian
// densities, completed squares, or Woodbury forms, evaluated with dense LU
// solves. Nothing here calls into btmf/posterior.hpp.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Mask = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

inline MatrixXd inv(const MatrixXd& m) { return m.fullPivLu().inverse(); }

inline double rel_error(const MatrixXd& a, const MatrixXd& b) {
  const double scale = std::max(1e-300, b.cwiseAbs().maxCoeff());
  return (a - b).cwiseAbs().maxCoeff() / std::max(scale, 1.0);
}

struct GaussianWishart {
  VectorXd mu;
  double beta;
  MatrixXd W_inv;
  double dof;
};

/// (W0*)^-1 through the completed square
///   W0^-1 + sum u u^T + beta0 mu0 mu0^T - beta* mu* mu*^T.
inline GaussianWishart gaussian_wishart(const MatrixXd& U, const VectorXd& mu0, double beta0,
                                        const MatrixXd& W0, double v0) {
  const auto m = static_cast<double>(U.cols());
  VectorXd sum = VectorXd::Zero(U.rows());
  MatrixXd outer = MatrixXd::Zero(U.rows(), U.rows());
  for (Eigen::Index i = 0; i < U.cols(); ++i) {
    sum += U.col(i);
    outer += U.col(i) * U.col(i).transpose();
  }
  GaussianWishart g;
  g.beta = beta0 + m;
  g.dof = v0 + m;
  g.mu = (beta0 * mu0 + sum) / g.beta;
  g.W_inv = inv(W0) + outer + beta0 * mu0 * mu0.transpose() - g.beta * g.mu * g.mu.transpose();
  return g;
}

struct Gaussian {
  MatrixXd precision;
  VectorXd mean;
  MatrixXd covariance;
};

/// u_i | rest with the observations of row i selected by a diagonal mask.
inline Gaussian spatial_factor(const MatrixXd& X, const VectorXd& y_row, const Mask& mask_row,
                               const VectorXd& mu_u, const MatrixXd& Lambda_u, double tau) {
  const auto t_len = X.cols();
  MatrixXd B = MatrixXd::Zero(t_len, t_len);
  VectorXd y = VectorXd::Zero(t_len);
  for (Eigen::Index t = 0; t < t_len; ++t)
    if (mask_row(t)) {
      B(t, t) = 1.0;
      y(t) = y_row(t);
    }
  Gaussian g;
  g.precision = Lambda_u + tau * X * B * X.transpose();
  g.covariance = inv(g.precision);
  g.mean = g.covariance * (tau * X * B * y + Lambda_u * mu_u);
  return g;
}

struct Mniw {
  MatrixXd V;
  MatrixXd Lambda;
  MatrixXd Psi;
  double dof;
};

/// AR regression posterior. Rows use 1-based times t = l_d + 1 .. T.
/// Psi* through the residual form
///   Psi0 + (P - Q L*)^T (P - Q L*) + (L* - L0)^T V0^-1 (L* - L0).
inline Mniw mniw(const MatrixXd& X, const std::vector<int>& lags, const MatrixXd& Lambda0,
                 const MatrixXd& V0, const MatrixXd& Psi0, double v0) {
  const auto k = X.rows();
  const auto t_len = X.cols();
  const auto d = static_cast<Eigen::Index>(lags.size());
  const int ld = lags.back();
  const auto rows = t_len - ld;
  MatrixXd P(rows, k), Q(rows, k * d);
  for (Eigen::Index t1 = ld + 1; t1 <= t_len; ++t1) {
    const auto r = t1 - ld - 1;
    P.row(r) = X.col(t1 - 1).transpose();
    for (Eigen::Index j = 0; j < d; ++j) Q.block(r, j * k, 1, k) = X.col(t1 - lags[j] - 1).transpose();
  }
  Mniw out;
  const MatrixXd V0i = inv(V0);
  out.V = inv(V0i + Q.transpose() * Q);
  out.Lambda = out.V * (V0i * Lambda0 + Q.transpose() * P);
  const MatrixXd resid = P - Q * out.Lambda;
  const MatrixXd shift = out.Lambda - Lambda0;
  out.Psi = Psi0 + resid.transpose() * resid + shift.transpose() * V0i * shift;
  out.dof = v0 + static_cast<double>(rows);
  return out;
}

/// Conditional of x_t (0-based) from the full joint Gaussian over vec(X).
///
/// With G the linear map from vec(X) to the stacked innovations
///   e_s = x_s                                  for s < l_d   (weight I)
///   e_s = x_s - sum_j B_j x_{s - l_j}          for s >= l_d  (weight Sigma^-1)
/// the joint log-density has precision J = G^T W G + tau sum_obs u u^T blocks
/// and linear term h = tau sum_obs u y. The conditional of block t is
/// N(J_tt^-1 (h_t - sum_{s != t} J_ts x_s), J_tt^-1).
inline Gaussian temporal_factor(Eigen::Index t, const MatrixXd& X, const MatrixXd& U, const MatrixXd& Y,
                                const Mask& mask, const MatrixXd& A, const MatrixXd& Sigma,
                                const std::vector<int>& lags, double tau) {
  const auto k = X.rows();
  const auto t_len = X.cols();
  const auto n = k * t_len;
  const int ld = lags.back();
  const auto d = static_cast<Eigen::Index>(lags.size());
  MatrixXd G = MatrixXd::Zero(n, n);
  MatrixXd W = MatrixXd::Zero(n, n);
  const MatrixXd Si = inv(Sigma);
  for (Eigen::Index s = 0; s < t_len; ++s) {
    G.block(s * k, s * k, k, k).setIdentity();
    if (s < ld) {
      W.block(s * k, s * k, k, k).setIdentity();
      continue;
    }
    W.block(s * k, s * k, k, k) = Si;
    for (Eigen::Index j = 0; j < d; ++j) {
      const MatrixXd Bj = A.block(j * k, 0, k, k).transpose();
      G.block(s * k, (s - lags[j]) * k, k, k) -= Bj;
    }
  }
  MatrixXd J = G.transpose() * W * G;
  VectorXd h = VectorXd::Zero(n);
  for (Eigen::Index s = 0; s < t_len; ++s)
    for (Eigen::Index i = 0; i < U.cols(); ++i)
      if (mask(i, s)) {
        J.block(s * k, s * k, k, k) += tau * U.col(i) * U.col(i).transpose();
        h.segment(s * k, k) += tau * Y(i, s) * U.col(i);
      }
  const Eigen::Map<const VectorXd> x(X.data(), n);
  VectorXd rhs = h.segment(t * k, k);
  for (Eigen::Index s = 0; s < t_len; ++s)
    if (s != t) rhs -= J.block(t * k, s * k, k, k) * x.segment(s * k, k);
  Gaussian g;
  g.precision = J.block(t * k, t * k, k, k);
  g.covariance = inv(g.precision);
  g.mean = g.covariance * rhs;
  return g;
}

struct Gamma {
  double shape;
  double rate;
};

inline Gamma precision(const MatrixXd& Y, const Mask& mask, const MatrixXd& U, const MatrixXd& X, double a0,
                       double b0) {
  double n = 0.0, ss = 0.0;
  const MatrixXd fit = U.transpose() * X;
  for (Eigen::Index i = 0; i < Y.rows(); ++i)
    for (Eigen::Index t = 0; t < Y.cols(); ++t)
      if (mask(i, t)) {
        n += 1.0;
        ss += (Y(i, t) - fit(i, t)) * (Y(i, t) - fit(i, t));
      }
  return Gamma{a0 + n / 2.0, b0 + ss / 2.0};
}

/// Psi0 + r r^T for the forecasting innovation covariance.
inline MatrixXd innovation_scale(const VectorXd& x, const VectorXd& ar_mean, const MatrixXd& Psi0) {
  MatrixXd out = Psi0;
  for (Eigen::Index a = 0; a < x.size(); ++a)
    for (Eigen::Index b = 0; b < x.size(); ++b) out(a, b) += (x(a) - ar_mean(a)) * (x(b) - ar_mean(b));
  return out;
}

/// Newest factor given its observed entries, by Gaussian conditioning of the
/// joint (x, y_obs) with y_obs = U_o^T x + noise (Woodbury form).
inline Gaussian current_factor(const VectorXd& y, const Mask& mask_col, const MatrixXd& U,
                               const VectorXd& ar_mean, const MatrixXd& Sigma_tilde, double tau) {
  std::vector<Eigen::Index> obs;
  for (Eigen::Index i = 0; i < U.cols(); ++i)
    if (mask_col(i)) obs.push_back(i);
  Gaussian g;
  if (obs.empty()) {
    g.mean = ar_mean;
    g.covariance = Sigma_tilde;
    g.precision = inv(Sigma_tilde);
    return g;
  }
  const auto o = static_cast<Eigen::Index>(obs.size());
  MatrixXd Uo(U.rows(), o);
  VectorXd yo(o);
  for (Eigen::Index c = 0; c < o; ++c) {
    Uo.col(c) = U.col(obs[static_cast<std::size_t>(c)]);
    yo(c) = y(obs[static_cast<std::size_t>(c)]);
  }
  const MatrixXd S = Uo.transpose() * Sigma_tilde * Uo + MatrixXd::Identity(o, o) / tau;
  const MatrixXd gain = Sigma_tilde * Uo * inv(S);
  g.mean = ar_mean + gain * (yo - Uo.transpose() * ar_mean);
  g.covariance = Sigma_tilde - gain * Uo.transpose() * Sigma_tilde;
  g.precision = inv(g.covariance);
  return g;
}

/// Random SPD matrix with eigenvalues in [lo, hi].
inline MatrixXd random_spd(Eigen::Index k, double lo, double hi, std::mt19937_64& gen) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform;
  MatrixXd z(k, k);
  for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = normal(gen);
  const Eigen::HouseholderQR<MatrixXd> qr(z);
  const MatrixXd q = qr.householderQ();
  VectorXd ev(k);
  for (Eigen::Index i = 0; i < k; ++i) ev(i) = lo + (hi - lo) * uniform(gen);
  return q * ev.asDiagonal() * q.transpose();
}

}  // namespace oracle
