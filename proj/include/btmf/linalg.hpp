#pragma once

#include <Eigen/Dense>

#include <array>
#include <atomic>
#include <cstddef>
#include <string>
#include <string_view>

#include "btmf/error.hpp"

namespace btmf {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Counts Cholesky factorizations that needed diagonal jitter.
class JitterCounter {
 public:
  void record(std::size_t escalations) noexcept {
    events_.fetch_add(1, std::memory_order_relaxed);
    escalations_.fetch_add(escalations, std::memory_order_relaxed);
  }
  std::size_t events() const noexcept { return events_.load(std::memory_order_relaxed); }
  std::size_t escalations() const noexcept { return escalations_.load(std::memory_order_relaxed); }

 private:
  std::atomic<std::size_t> events_{0};
  std::atomic<std::size_t> escalations_{0};
};

inline MatrixXd symmetrized(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

inline double max_abs(const MatrixXd& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

inline double symmetry_error(const MatrixXd& m) { return max_abs(m - m.transpose()); }

/// Lower Cholesky factor of a symmetric PSD matrix.
///
/// A plain factorization is tried first. On failure, eps * trace / K is added
/// to the diagonal with eps stepping 1e-10, 1e-9, ..., 1e-6; the fifth failure
/// raises. An exactly zero matrix factors to zero.
inline MatrixXd cholesky_lower(const MatrixXd& m, std::string_view name,
                               JitterCounter* jitter = nullptr) {
  require(m.rows() == m.cols(), ErrorKind::shape,
          std::string(name) + " is not square");
  const Index k = m.rows();
  const double scale = std::max(1.0, max_abs(m));
  if (symmetry_error(m) > 1e-8 * scale) {
    throw Error(ErrorKind::decomposition, std::string(name) + " is not symmetric");
  }
  if (k == 0) return MatrixXd(0, 0);

  const MatrixXd sym = symmetrized(m);
  Eigen::LLT<MatrixXd> llt(sym);
  if (llt.info() == Eigen::Success) return llt.matrixL();

  if (max_abs(sym) == 0.0) return MatrixXd::Zero(k, k);

  const double trace = sym.trace();
  if (trace > 0.0) {
    constexpr std::array<double, 5> kEps{1e-10, 1e-9, 1e-8, 1e-7, 1e-6};
    for (std::size_t step = 0; step < kEps.size(); ++step) {
      MatrixXd shifted = sym;
      shifted.diagonal().array() += kEps[step] * trace / static_cast<double>(k);
      llt.compute(shifted);
      if (llt.info() == Eigen::Success) {
        if (jitter != nullptr) jitter->record(step + 1);
        return llt.matrixL();
      }
    }
  }
  throw Error(ErrorKind::decomposition,
              "cholesky of " + std::string(name) + " failed (not positive semi-definite)");
}

/// Inverse of an SPD matrix through its Cholesky factor; result is symmetric.
inline MatrixXd spd_inverse(const MatrixXd& m, std::string_view name,
                            JitterCounter* jitter = nullptr) {
  const MatrixXd lower = cholesky_lower(m, name, jitter);
  const Index k = m.rows();
  MatrixXd inv_lower = lower.triangularView<Eigen::Lower>().solve(MatrixXd::Identity(k, k));
  return symmetrized(inv_lower.transpose() * inv_lower);
}

/// Solves precision * x = rhs given the lower Cholesky factor of precision.
inline VectorXd cholesky_solve(const MatrixXd& lower, const VectorXd& rhs) {
  VectorXd y = lower.triangularView<Eigen::Lower>().solve(rhs);
  return lower.transpose().triangularView<Eigen::Upper>().solve(y);
}

}  // namespace btmf
