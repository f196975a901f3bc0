#pragma once

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "btmf/incremental.hpp"
#include "btmf/scenarios.hpp"

namespace btmf {

struct SweepCell {
  Index rank = 0;
  MissingScenario scenario = MissingScenario::random;
  double eta = 0.0;
  AccuracyStats stats;
  double seconds = 0.0;
};

struct SweepConfig {
  std::vector<Index> ranks{4, 8, 12};
  std::vector<MissingSpec> scenarios;  // one mask per entry, reused across ranks
  IncrementalConfig base;              // rank and prior are replaced per cell
};

/// Imputation accuracy over rank x missing scenario. Each cell masks the
/// fully observed `truth`, runs a standalone chain and scores the masked cells.
inline std::vector<SweepCell> run_rank_sweep(const ObservationSet& truth, const SweepConfig& config,
                                             const RandomSource& rng,
                                             const std::function<void(const SweepCell&)>& on_cell = {}) {
  truth.validate();
  require(!config.ranks.empty() && !config.scenarios.empty(), ErrorKind::config,
          "sweep needs at least one rank and one scenario");
  std::vector<SweepCell> cells;
  for (const MissingSpec& spec : config.scenarios) {
    const Mask mask = generate_mask(spec, truth.channel_groups, truth.length());
    ObservationSet masked = truth;
    apply_mask(masked, mask);
    const Mask positions = missing_positions(masked.mask, truth.mask);
    for (Index rank : config.ranks) {
      const auto started = std::chrono::steady_clock::now();
      IncrementalConfig cfg = config.base;
      cfg.rank = rank;
      cfg.prior = PriorConfig{};
      SweepCell cell;
      cell.rank = rank;
      cell.scenario = spec.scenario;
      cell.eta = spec.scenario == MissingScenario::random       ? spec.eta_random
                 : spec.scenario == MissingScenario::structured ? spec.eta_structured
                                                                : spec.eta_random + spec.eta_structured;
      try {
        const ImputationOutcome out = run_standalone_imputation(masked, cfg, rng);
        cell.stats = accuracy_at(truth.values, out.prediction.mean, positions);
      } catch (const Error& e) {
        throw e.with_context("rank " + std::to_string(rank) + " " + std::string(to_string(spec.scenario)));
      }
      cell.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
      if (on_cell) on_cell(cell);
      cells.push_back(cell);
    }
  }
  return cells;
}

/// CSV table: rank,scenario,eta,count,rmse,rms,rho.
inline std::string format_sweep_table(const std::vector<SweepCell>& cells) {
  std::string out = "rank,scenario,eta,count,rmse,rms,rho\n";
  char buf[160];
  for (const SweepCell& c : cells) {
    std::snprintf(buf, sizeof(buf), "%lld,%s,%.4f,%lld,%.6g,%.6g,%.2f\n", static_cast<long long>(c.rank),
                  std::string(to_string(c.scenario)).c_str(), c.eta,
                  static_cast<long long>(c.stats.count), c.stats.rmse, c.stats.rms, c.stats.rho);
    out += buf;
  }
  return out;
}

}  // namespace btmf
