#pragma once

#include <chrono>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "btmf/distributions.hpp"
#include "btmf/error.hpp"
#include "btmf/model.hpp"
#include "btmf/random.hpp"

namespace btmf {

/// Planted low-rank data: each latent factor is an AR(2) oscillator
///   x_t = 2 r cos(w) x_{t-1} - r^2 x_{t-2} + e_t,  e_t ~ N(0, innovation_std^2),
/// the loadings U are i.i.d. N(0, 1), and Y = U^T X + noise with noise std
/// noise_fraction * RMS(U^T X).
struct SyntheticSpec {
  Index channels = 20;
  Index length = 2000;
  Index rank = 4;
  std::vector<double> periods;  // columns per cycle; empty picks a default set
  double damping = 1.0;         // r
  double innovation_std = 0.0;
  double noise_fraction = 0.0;
  Index temperature_channels = 0;  // trailing rows labelled "temperature"
  std::uint64_t seed = 0;
  std::chrono::seconds sample_interval{600};
  Timestamp start = Timestamp{std::chrono::sys_days{std::chrono::year{2020} / 1 / 1}};

  std::vector<double> resolved_periods() const {
    if (!periods.empty()) return periods;
    static constexpr double base[] = {144.0, 288.0, 72.0, 432.0, 48.0, 96.0, 216.0, 36.0};
    std::vector<double> out;
    for (Index k = 0; k < rank; ++k) out.push_back(base[k % 8] * (1.0 + 0.1 * static_cast<double>(k / 8)));
    return out;
  }

  void validate() const {
    require(channels >= 1 && length >= 3 && rank >= 1, ErrorKind::invalid_parameter,
            "synthetic data needs channels >= 1, length >= 3, rank >= 1");
    require(periods.empty() || static_cast<Index>(periods.size()) == rank, ErrorKind::invalid_parameter,
            "one period per latent factor");
    for (double p : resolved_periods())
      require(p > 2.0, ErrorKind::invalid_parameter, "periods must exceed 2 columns");
    require(damping > 0.0 && damping <= 1.0, ErrorKind::invalid_parameter, "damping must lie in (0, 1]");
    require(innovation_std >= 0.0 && noise_fraction >= 0.0, ErrorKind::invalid_parameter,
            "noise levels must be non-negative");
    require(temperature_channels >= 0 && temperature_channels <= channels, ErrorKind::invalid_parameter,
            "temperature channel count out of range");
  }
};

struct SyntheticData {
  ObservationSet obs;  // fully observed, noisy
  MatrixXd clean;      // U^T X
  MatrixXd U;
  MatrixXd X;
  ARModel ar;          // the generating AR model (lags {1, 2})
};

inline SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const RandomSource root(spec.seed);
  RandomSource u_rng = root.split(0);
  RandomSource x_rng = root.split(1);
  RandomSource noise_rng = root.split(2);
  const Index k = spec.rank;
  const std::vector<double> periods = spec.resolved_periods();

  SyntheticData out;
  out.U = standard_normal_matrix(k, spec.channels, u_rng);
  out.X.resize(k, spec.length);
  out.ar = make_ar_model({1, 2}, k);
  out.ar.A.setZero();
  out.ar.Sigma = MatrixXd::Identity(k, k) * std::max(spec.innovation_std * spec.innovation_std, 1e-12);
  const double r = spec.damping;
  for (Index f = 0; f < k; ++f) {
    const double w = 2.0 * std::numbers::pi / periods[static_cast<std::size_t>(f)];
    const double a1 = 2.0 * r * std::cos(w);
    const double a2 = -r * r;
    out.ar.A(f, f) = a1;
    out.ar.A(k + f, f) = a2;
    const double phase = 2.0 * std::numbers::pi * x_rng.uniform();
    out.X(f, 0) = std::sin(phase);
    out.X(f, 1) = r * std::sin(w + phase);
    for (Index t = 2; t < spec.length; ++t)
      out.X(f, t) = a1 * out.X(f, t - 1) + a2 * out.X(f, t - 2) + spec.innovation_std * x_rng.normal();
  }
  out.clean = out.U.transpose() * out.X;

  MatrixXd values = out.clean;
  if (spec.noise_fraction > 0.0) {
    const double rms = std::sqrt(out.clean.squaredNorm() / static_cast<double>(out.clean.size()));
    values += spec.noise_fraction * rms * standard_normal_matrix(spec.channels, spec.length, noise_rng);
  }
  std::vector<std::string> groups(static_cast<std::size_t>(spec.channels), "strain");
  for (Index i = spec.channels - spec.temperature_channels; i < spec.channels; ++i)
    groups[static_cast<std::size_t>(i)] = "temperature";
  out.obs = make_observation_set(values, "strain");
  out.obs.channel_groups = groups;
  for (Index i = 0; i < spec.channels; ++i) {
    const bool temp = groups[static_cast<std::size_t>(i)] == "temperature";
    out.obs.channel_ids[static_cast<std::size_t>(i)] = (temp ? "T" : "S") + std::to_string(i + 1);
  }
  out.obs.sample_interval = spec.sample_interval;
  out.obs.start = spec.start;
  return out;
}

}  // namespace btmf
