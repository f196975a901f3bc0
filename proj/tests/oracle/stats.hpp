#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

/// Two-sample Kolmogorov-Smirnov p-value (asymptotic distribution).
inline double ks_two_sample_p(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double ne = std::sqrt(na * nb / (na + nb));
  const double lambda = (ne + 0.12 + 0.11 / ne) * d;
  double p = 0.0, sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    p += sign * 2.0 * std::exp(-2.0 * k * k * lambda * lambda);
    sign = -sign;
  }
  return std::clamp(p, 0.0, 1.0);
}

/// Sample mean and covariance of the rows of `draws`.
struct Moments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

inline Moments sample_moments(const Eigen::MatrixXd& draws) {
  Moments m;
  m.mean = draws.colwise().mean().transpose();
  const Eigen::MatrixXd c = draws.rowwise() - m.mean.transpose();
  m.cov = c.transpose() * c / static_cast<double>(draws.rows() - 1);
  return m;
}

}  // namespace oracle
