#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "btmf/error.hpp"
#include "btmf/linalg.hpp"
#include "btmf/random.hpp"

namespace btmf {

/// Gamma(shape, rate) with mean shape / rate.
///
/// Marsaglia-Tsang squeeze for shape >= 1; for shape < 1 a Gamma(shape + 1)
/// draw is boosted by U^(1/shape), computed in log space. Draws that
/// underflow are floored at the smallest normal double.
inline double sample_gamma(double shape, double rate, RandomSource& rng) {
  require(shape > 0.0 && std::isfinite(shape), ErrorKind::invalid_parameter,
          "gamma shape must be positive, got " + std::to_string(shape));
  require(rate > 0.0 && std::isfinite(rate), ErrorKind::invalid_parameter,
          "gamma rate must be positive, got " + std::to_string(rate));

  const bool boost = shape < 1.0;
  const double a = boost ? shape + 1.0 : shape;
  const double d = a - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  double draw = 0.0;
  for (;;) {
    double x = 0.0, v = 0.0;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2 || std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) {
      draw = d * v;
      break;
    }
  }
  double log_draw = std::log(draw) - std::log(rate);
  if (boost) log_draw += std::log(rng.uniform()) / shape;
  const double result = std::exp(log_draw);
  if (!(result >= std::numeric_limits<double>::min())) return std::numeric_limits<double>::min();
  if (!std::isfinite(result)) return std::numeric_limits<double>::max();
  return result;
}

inline double sample_chi_square(double dof, RandomSource& rng) {
  return sample_gamma(0.5 * dof, 0.5, rng);
}

inline VectorXd standard_normal_vector(Index n, RandomSource& rng) {
  VectorXd z(n);
  for (Index i = 0; i < n; ++i) z(i) = rng.normal();
  return z;
}

inline MatrixXd standard_normal_matrix(Index rows, Index cols, RandomSource& rng) {
  MatrixXd z(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) z(i, j) = rng.normal();
  return z;
}

/// Draw from N(mean, covariance). A zero covariance returns the mean exactly.
inline VectorXd sample_mvn(const VectorXd& mean, const MatrixXd& covariance, RandomSource& rng,
                           JitterCounter* jitter = nullptr) {
  require(covariance.rows() == mean.size() && covariance.cols() == mean.size(), ErrorKind::shape,
          "mvn covariance does not match mean length");
  const MatrixXd lower = cholesky_lower(covariance, "mvn covariance", jitter);
  return mean + lower * standard_normal_vector(mean.size(), rng);
}

/// Draw from N(mean, precision^-1) without forming the covariance.
inline VectorXd sample_mvn_precision(const VectorXd& mean, const MatrixXd& precision,
                                     RandomSource& rng, std::string_view name = "precision",
                                     JitterCounter* jitter = nullptr) {
  require(precision.rows() == mean.size() && precision.cols() == mean.size(), ErrorKind::shape,
          std::string(name) + " does not match mean length");
  const MatrixXd lower = cholesky_lower(precision, name, jitter);
  const VectorXd z = standard_normal_vector(mean.size(), rng);
  return mean + lower.transpose().triangularView<Eigen::Upper>().solve(z);
}

/// Wishart draw by Bartlett decomposition: W = (L A)(L A)^T with L the
/// Cholesky factor of `scale`, A lower triangular with chi-distributed
/// diagonal and standard normal entries below it. Mean is dof * scale.
inline MatrixXd sample_wishart(const MatrixXd& scale, double dof, RandomSource& rng,
                               JitterCounter* jitter = nullptr) {
  const Index k = scale.rows();
  require(scale.cols() == k && k > 0, ErrorKind::shape, "wishart scale must be square");
  require(dof > static_cast<double>(k - 1), ErrorKind::invalid_parameter,
          "wishart dof " + std::to_string(dof) + " must exceed K - 1 = " + std::to_string(k - 1));
  const MatrixXd lower = cholesky_lower(scale, "wishart scale", jitter);
  MatrixXd bartlett = MatrixXd::Zero(k, k);
  for (Index i = 0; i < k; ++i) {
    bartlett(i, i) = std::sqrt(sample_chi_square(dof - static_cast<double>(i), rng));
    for (Index j = 0; j < i; ++j) bartlett(i, j) = rng.normal();
  }
  const MatrixXd factor = lower * bartlett;
  return symmetrized(factor * factor.transpose());
}

/// Sigma with Sigma^-1 ~ W(scale^-1, dof); mean is scale / (dof - K - 1).
inline MatrixXd sample_inverse_wishart(const MatrixXd& scale, double dof, RandomSource& rng,
                                       JitterCounter* jitter = nullptr) {
  const MatrixXd scale_inv = spd_inverse(scale, "inverse-wishart scale", jitter);
  const MatrixXd precision = sample_wishart(scale_inv, dof, rng, jitter);
  return spd_inverse(precision, "inverse-wishart draw", jitter);
}

/// MN(mean, row_cov, col_cov) draw as mean + L_r Z L_c^T.
inline MatrixXd sample_matrix_normal(const MatrixXd& mean, const MatrixXd& row_cov,
                                     const MatrixXd& col_cov, RandomSource& rng,
                                     JitterCounter* jitter = nullptr) {
  require(row_cov.rows() == mean.rows() && col_cov.rows() == mean.cols(), ErrorKind::shape,
          "matrix-normal covariance factors do not match mean shape");
  const MatrixXd row_lower = cholesky_lower(row_cov, "matrix-normal row covariance", jitter);
  const MatrixXd col_lower = cholesky_lower(col_cov, "matrix-normal column covariance", jitter);
  const MatrixXd z = standard_normal_matrix(mean.rows(), mean.cols(), rng);
  return mean + row_lower * z * col_lower.transpose();
}

}  // namespace btmf
