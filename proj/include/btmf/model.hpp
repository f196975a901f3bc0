#pragma once

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "btmf/error.hpp"
#include "btmf/linalg.hpp"

namespace btmf {

/// 1 = observed, 0 = missing.
using Mask = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;
using Timestamp = std::chrono::sys_seconds;

/// Sensor data matrix: rows are channels, columns are time stamps.
///
/// Columns are 0-based in code. `first_column` is the absolute stream index of
/// column 0.
/// Unobserved cells hold NaN and are never read by inference.
struct ObservationSet {
  MatrixXd values;
  Mask mask;
  std::vector<std::string> channel_ids;
  std::vector<std::string> channel_groups;
  std::chrono::seconds sample_interval{600};
  Timestamp start{};
  Index first_column = 0;

  Index channels() const noexcept { return values.rows(); }
  Index length() const noexcept { return values.cols(); }
  bool observed(Index i, Index t) const { return mask(i, t) != 0; }

  Index observed_count() const { return mask.cast<Index>().sum(); }

  /// Throws unless the structural invariants hold.
  void validate() const {
    require(values.rows() >= 1 && values.cols() >= 1, ErrorKind::shape,
            "observation set needs at least one channel and one time stamp");
    require(mask.rows() == values.rows() && mask.cols() == values.cols(), ErrorKind::shape,
            "mask shape does not match values");
    require(static_cast<Index>(channel_ids.size()) == values.rows() &&
                static_cast<Index>(channel_groups.size()) == values.rows(),
            ErrorKind::shape, "channel labels do not match row count");
    std::set<std::string> seen;
    for (const auto& id : channel_ids)
      require(seen.insert(id).second, ErrorKind::data, "duplicate channel id '" + id + "'");
    for (Index t = 0; t < values.cols(); ++t)
      for (Index i = 0; i < values.rows(); ++i) {
        require(mask(i, t) <= 1, ErrorKind::data, "mask entries must be 0 or 1");
        if (mask(i, t) == 1)
          require(std::isfinite(values(i, t)), ErrorKind::data,
                  "non-finite value at observed position");
      }
  }

  Timestamp time_of(Index column) const {
    return start + sample_interval * column;
  }

  /// Columns [begin, end) as a new set with timestamps and indices shifted.
  ObservationSet slice(Index begin, Index end) const {
    require(0 <= begin && begin <= end && end <= length(), ErrorKind::out_of_range,
            "column slice out of range");
    ObservationSet out;
    out.values = values.middleCols(begin, end - begin);
    out.mask = mask.middleCols(begin, end - begin);
    out.channel_ids = channel_ids;
    out.channel_groups = channel_groups;
    out.sample_interval = sample_interval;
    out.start = time_of(begin);
    out.first_column = first_column + begin;
    return out;
  }
};

/// Builds a fully observed set with generated channel ids.
inline ObservationSet make_observation_set(const MatrixXd& values,
                                           std::string_view group = "strain") {
  ObservationSet obs;
  obs.values = values;
  obs.mask = Mask::Ones(values.rows(), values.cols());
  for (Index i = 0; i < values.rows(); ++i) {
    obs.channel_ids.push_back("ch" + std::to_string(i));
    obs.channel_groups.emplace_back(group);
  }
  return obs;
}

/// Replaces masked cells with NaN.
inline void apply_mask(ObservationSet& obs, const Mask& mask) {
  require(mask.rows() == obs.channels() && mask.cols() == obs.length(), ErrorKind::shape,
          "mask shape does not match observation set");
  for (Index t = 0; t < obs.length(); ++t)
    for (Index i = 0; i < obs.channels(); ++i) {
      obs.mask(i, t) = static_cast<std::uint8_t>(obs.mask(i, t) && mask(i, t));
      if (!obs.mask(i, t)) obs.values(i, t) = std::numeric_limits<double>::quiet_NaN();
    }
}

/// Latent factorization Y ~ U^T X. Column i of U is the spatial factor of
/// channel i, column t of X the temporal factor of time t.
struct FactorState {
  MatrixXd U;  // K x M
  MatrixXd X;  // K x T
  double tau_eps = 1.0;

  Index rank() const noexcept { return U.rows(); }

  void validate(Index channels, Index length) const {
    require(U.rows() >= 1 && X.rows() == U.rows(), ErrorKind::shape, "factor ranks disagree");
    require(U.cols() == channels, ErrorKind::shape, "U column count does not match channels");
    require(X.cols() == length, ErrorKind::shape, "X column count does not match time stamps");
    require(tau_eps > 0.0, ErrorKind::invalid_parameter, "tau_eps must be positive");
  }
};

/// Reconstruction U^T X, entrywise u_i^T x_t.
inline MatrixXd reconstruct(const MatrixXd& U, const MatrixXd& X) {
  require(U.rows() == X.rows(), ErrorKind::shape,
          "reconstruct: U has rank " + std::to_string(U.rows()) + " but X has rank " +
              std::to_string(X.rows()));
  return U.transpose() * X;
}

inline MatrixXd reconstruct(const FactorState& factors) { return reconstruct(factors.U, factors.X); }

/// Lags must be non-empty, positive and strictly increasing.
inline void validate_lags(const std::vector<int>& lags) {
  require(!lags.empty(), ErrorKind::invalid_parameter, "lag set is empty");
  for (std::size_t j = 0; j < lags.size(); ++j) {
    require(lags[j] >= 1, ErrorKind::invalid_parameter, "lags must be positive");
    if (j > 0)
      require(lags[j] > lags[j - 1], ErrorKind::invalid_parameter,
              "lags must be strictly increasing");
  }
}

/// Vector autoregression on temporal factors.
///
/// A stacks A_1..A_d vertically ((K d) x K); the AR mean at time t is
/// A^T z_t with z_t = [x_{t-l_1}; ...; x_{t-l_d}]. The K x K matrix acting on
/// x_{t-l_j} is therefore the transpose of block j.
struct ARModel {
  std::vector<int> lags;
  MatrixXd A;
  MatrixXd Sigma;

  Index order() const noexcept { return static_cast<Index>(lags.size()); }
  int max_lag() const { return lags.back(); }
  Index rank() const noexcept { return Sigma.rows(); }

  /// Coefficient applied to x_{t - l_j}.
  MatrixXd coefficient(Index j) const {
    const Index k = rank();
    return A.middleRows(j * k, k).transpose();
  }

  void validate() const {
    validate_lags(lags);
    const Index k = Sigma.rows();
    require(Sigma.cols() == k && k >= 1, ErrorKind::shape, "Sigma must be square");
    require(A.rows() == k * order() && A.cols() == k, ErrorKind::shape,
            "A must be (K d) x K");
  }
};

/// Null AR model with identity innovation covariance.
inline ARModel make_ar_model(std::vector<int> lags, Index rank) {
  validate_lags(lags);
  ARModel ar;
  ar.A = MatrixXd::Zero(rank * static_cast<Index>(lags.size()), rank);
  ar.Sigma = MatrixXd::Identity(rank, rank);
  ar.lags = std::move(lags);
  return ar;
}

/// z_t for 0-based column t of X; needs t >= max lag.
inline VectorXd lagged_stack(const std::vector<int>& lags, const MatrixXd& X, Index t) {
  const Index k = X.rows();
  require(!lags.empty() && t - lags.back() >= 0 && t < X.cols() + lags.front(),
          ErrorKind::out_of_range,
          "time " + std::to_string(t) + " lacks the lagged history its AR mean needs");
  VectorXd z(k * static_cast<Index>(lags.size()));
  for (std::size_t j = 0; j < lags.size(); ++j)
    z.segment(static_cast<Index>(j) * k, k) = X.col(t - lags[j]);
  return z;
}

/// A^T z_t for 0-based column t (the time being predicted may lie one past
/// the end of X). Times t < max lag use the N(0, I) branch instead and raise.
inline VectorXd ar_mean(const ARModel& ar, const MatrixXd& X, Index t) {
  require(ar.A.cols() == X.rows(), ErrorKind::shape, "AR rank does not match X");
  return ar.A.transpose() * lagged_stack(ar.lags, X, t);
}

/// Fixed hyper-hyper-parameters of the hierarchical model.
struct PriorConfig {
  VectorXd mu0;
  double beta0 = 1.0;
  MatrixXd W0;
  double v0 = 0.0;
  MatrixXd Lambda0;
  MatrixXd V0;
  MatrixXd Psi0;
  double a0 = 1e-6;
  double b0 = 1e-6;

  Index rank() const noexcept { return mu0.size(); }

  /// mu0 = 0, Lambda0 = 0, W0 = V0 = Psi0 = I, beta0 = 1, v0 = K, a0 = b0 = 1e-6.
  static PriorConfig defaults(Index rank, Index order) {
    PriorConfig p;
    p.mu0 = VectorXd::Zero(rank);
    p.W0 = MatrixXd::Identity(rank, rank);
    p.v0 = static_cast<double>(rank);
    p.Lambda0 = MatrixXd::Zero(rank * order, rank);
    p.V0 = MatrixXd::Identity(rank * order, rank * order);
    p.Psi0 = MatrixXd::Identity(rank, rank);
    return p;
  }

  void validate(Index order) const {
    const Index k = rank();
    require(k >= 1, ErrorKind::invalid_parameter, "prior rank must be positive");
    require(beta0 > 0.0, ErrorKind::invalid_parameter, "beta0 must be positive");
    require(v0 > static_cast<double>(k - 1), ErrorKind::invalid_parameter, "v0 must exceed K - 1");
    require(a0 > 0.0 && b0 > 0.0, ErrorKind::invalid_parameter, "a0 and b0 must be positive");
    require(W0.rows() == k && W0.cols() == k && Psi0.rows() == k && Psi0.cols() == k,
            ErrorKind::shape, "W0 and Psi0 must be K x K");
    require(Lambda0.rows() == k * order && Lambda0.cols() == k, ErrorKind::shape,
            "Lambda0 must be (K d) x K");
    require(V0.rows() == k * order && V0.cols() == k * order, ErrorKind::shape,
            "V0 must be (K d) x (K d)");
  }
};

struct SpatialHyperState {
  VectorXd mu_u;
  MatrixXd Lambda_u;
};

enum class PredictionKind { imputation, forecast };

/// Per-entry posterior mean and standard deviation.
struct PredictionResult {
  MatrixXd mean;
  MatrixXd std;
  Index n_samples = 0;
  PredictionKind kind = PredictionKind::imputation;
  Index first_column = 0;
};

/// Single-pass mean / second-moment accumulator over matrix samples.
class RunningMoments {
 public:
  RunningMoments() = default;
  RunningMoments(Index rows, Index cols)
      : mean_(MatrixXd::Zero(rows, cols)), m2_(MatrixXd::Zero(rows, cols)) {}

  template <typename Derived>
  void add(const Eigen::MatrixBase<Derived>& sample) {
    ++count_;
    const MatrixXd delta = sample - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_.array() += delta.array() * (sample - mean_).array();
  }

  Index count() const noexcept { return count_; }
  const MatrixXd& mean() const noexcept { return mean_; }

  /// Population standard deviation; exactly zero with a single sample.
  MatrixXd std() const {
    if (count_ < 2) return MatrixXd::Zero(mean_.rows(), mean_.cols());
    return (m2_.array().max(0.0) / static_cast<double>(count_)).sqrt().matrix();
  }

  PredictionResult result(PredictionKind kind, Index first_column = 0) const {
    return PredictionResult{mean_, std(), count_, kind, first_column};
  }

 private:
  MatrixXd mean_;
  MatrixXd m2_;
  Index count_ = 0;
};

}  // namespace btmf
