#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "btmf/error.hpp"
#include "btmf/model.hpp"
#include "btmf/random.hpp"

namespace btmf {

/// RM: random cells. SM: whole blocks of consecutive columns. MM: SM then RM.
enum class MissingScenario { random, structured, mixed };

inline std::string_view to_string(MissingScenario s) {
  switch (s) {
    case MissingScenario::random: return "RM";
    case MissingScenario::structured: return "SM";
    case MissingScenario::mixed: return "MM";
  }
  return "?";
}

inline MissingScenario parse_scenario(std::string_view name) {
  if (name == "RM" || name == "rm") return MissingScenario::random;
  if (name == "SM" || name == "sm") return MissingScenario::structured;
  if (name == "MM" || name == "mm") return MissingScenario::mixed;
  throw Error(ErrorKind::config, "unknown missing scenario '" + std::string(name) + "'");
}

struct MissingSpec {
  MissingScenario scenario = MissingScenario::random;
  double eta_random = 0.0;
  double eta_structured = 0.0;
  Index block_length = 144;
  std::vector<std::string> target_groups;  // empty selects every row
  bool shared_blocks = false;              // SM blocks at the same columns in every target row
  std::uint64_t seed = 0;

  void validate() const {
    require(eta_random >= 0.0 && eta_random <= 1.0 && eta_structured >= 0.0 && eta_structured <= 1.0,
            ErrorKind::invalid_parameter, "missing rates must lie in [0, 1]");
    require(block_length >= 1, ErrorKind::invalid_parameter, "block length must be at least 1");
    const double effective = (scenario == MissingScenario::random ? eta_random : 0.0) +
                             (scenario == MissingScenario::structured ? eta_structured : 0.0) +
                             (scenario == MissingScenario::mixed ? eta_random + eta_structured : 0.0);
    require(effective <= 1.0, ErrorKind::invalid_parameter, "combined missing rate exceeds 1");
  }
};

namespace detail {

/// First `count` entries of `items` become a uniform random subset
/// (partial Fisher-Yates).
template <typename T>
void partial_shuffle(std::vector<T>& items, std::size_t count, RandomSource& rng) {
  for (std::size_t i = 0; i < count && i + 1 < items.size(); ++i) {
    const auto j = i + static_cast<std::size_t>(rng.uniform_index(items.size() - i));
    std::swap(items[i], items[j]);
  }
}

inline std::vector<Index> target_rows(const MissingSpec& spec, const std::vector<std::string>& groups) {
  std::vector<Index> rows;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const bool selected =
        spec.target_groups.empty() ||
        std::find(spec.target_groups.begin(), spec.target_groups.end(), groups[i]) !=
            spec.target_groups.end();
    if (selected) rows.push_back(static_cast<Index>(i));
  }
  return rows;
}

inline Index drop_structured(Mask& mask, const std::vector<Index>& rows, double eta, Index block,
                             bool shared, RandomSource rng) {
  const Index t_len = mask.cols();
  const Index slots = t_len / block;
  const auto n_rows = static_cast<Index>(rows.size());
  const double cells = static_cast<double>(n_rows * t_len);
  auto blocks_total = static_cast<Index>(std::llround(eta * cells / static_cast<double>(block)));
  if (blocks_total == 0) return 0;

  auto clear = [&](Index row, Index slot) {
    mask.row(row).segment(slot * block, block).setZero();
  };
  std::vector<Index> slot_ids(static_cast<std::size_t>(slots));
  std::iota(slot_ids.begin(), slot_ids.end(), Index{0});

  if (shared) {
    const auto per_row =
        static_cast<Index>(std::llround(static_cast<double>(blocks_total) / static_cast<double>(n_rows)));
    require(per_row <= slots, ErrorKind::infeasible_spec,
            "structured rate needs " + std::to_string(per_row) + " blocks per row but only " +
                std::to_string(slots) + " fit");
    partial_shuffle(slot_ids, static_cast<std::size_t>(per_row), rng);
    for (Index r : rows)
      for (Index b = 0; b < per_row; ++b) clear(r, slot_ids[static_cast<std::size_t>(b)]);
    return per_row * block * n_rows;
  }

  require(blocks_total <= slots * n_rows, ErrorKind::infeasible_spec,
          "structured rate needs " + std::to_string(blocks_total) + " blocks but only " +
              std::to_string(slots * n_rows) + " disjoint blocks fit");
  // Spread blocks as evenly as possible; a random subset of rows takes one extra.
  const Index base = blocks_total / n_rows;
  const Index extra = blocks_total % n_rows;
  std::vector<Index> order(rows.size());
  std::iota(order.begin(), order.end(), Index{0});
  partial_shuffle(order, static_cast<std::size_t>(extra), rng);
  std::vector<Index> per_row(rows.size(), base);
  for (Index e = 0; e < extra; ++e) ++per_row[static_cast<std::size_t>(order[static_cast<std::size_t>(e)])];
  if (base + (extra > 0 ? 1 : 0) > slots)
    throw Error(ErrorKind::infeasible_spec, "structured rate exceeds the blocks available per row");

  for (std::size_t r = 0; r < rows.size(); ++r) {
    RandomSource row_rng = rng.split(r);
    std::vector<Index> ids = slot_ids;
    partial_shuffle(ids, static_cast<std::size_t>(per_row[r]), row_rng);
    for (Index b = 0; b < per_row[r]; ++b) clear(rows[r], ids[static_cast<std::size_t>(b)]);
  }
  return blocks_total * block;
}

inline void drop_random(Mask& mask, const std::vector<Index>& rows, Index count, RandomSource rng) {
  std::vector<std::pair<Index, Index>> cells;
  for (Index r : rows)
    for (Index t = 0; t < mask.cols(); ++t)
      if (mask(r, t)) cells.emplace_back(r, t);
  require(count <= static_cast<Index>(cells.size()), ErrorKind::infeasible_spec,
          "random rate needs more cells than remain observed");
  partial_shuffle(cells, static_cast<std::size_t>(count), rng);
  for (Index c = 0; c < count; ++c) {
    const auto& [r, t] = cells[static_cast<std::size_t>(c)];
    mask(r, t) = 0;
  }
}

}  // namespace detail

/// Missing-data mask (1 = kept) for rows labelled by `groups` and `length`
/// columns. Rates count target-row cells only; other rows stay observed.
///
/// In MM the random part tops up to round((eta_s + eta_r) * N) missing cells.
inline Mask generate_mask(const MissingSpec& spec, const std::vector<std::string>& groups, Index length) {
  spec.validate();
  require(!groups.empty() && length >= 1, ErrorKind::shape, "mask needs at least one cell");
  Mask mask = Mask::Ones(static_cast<Index>(groups.size()), length);
  const std::vector<Index> rows = detail::target_rows(spec, groups);
  if (rows.empty()) return mask;
  const auto cells = static_cast<double>(static_cast<Index>(rows.size()) * length);
  const RandomSource root(spec.seed);

  switch (spec.scenario) {
    case MissingScenario::random:
      detail::drop_random(mask, rows, static_cast<Index>(std::llround(spec.eta_random * cells)),
                          root.split(1));
      break;
    case MissingScenario::structured:
      detail::drop_structured(mask, rows, spec.eta_structured, spec.block_length, spec.shared_blocks,
                              root.split(0));
      break;
    case MissingScenario::mixed: {
      const Index structured = detail::drop_structured(mask, rows, spec.eta_structured,
                                                       spec.block_length, spec.shared_blocks,
                                                       root.split(0));
      const Index target =
          static_cast<Index>(std::llround((spec.eta_structured + spec.eta_random) * cells));
      detail::drop_random(mask, rows, std::max<Index>(0, target - structured), root.split(1));
      break;
    }
  }
  return mask;
}

inline Mask generate_mask(const MissingSpec& spec, Index channels, Index length) {
  return generate_mask(spec, std::vector<std::string>(static_cast<std::size_t>(channels), "strain"),
                       length);
}

/// Error statistics behind the accuracy figure.
struct AccuracyStats {
  Index count = 0;
  double rmse = 0.0;
  double rms = 0.0;
  double rho = 0.0;  // percent
};

/// rho = (1 - RMSE / RMS(truth)) * 100. Not clipped; can be negative.
inline AccuracyStats accuracy_stats(const std::vector<double>& truth, const std::vector<double>& estimate) {
  require(truth.size() == estimate.size(), ErrorKind::shape, "truth and estimate lengths differ");
  require(!truth.empty(), ErrorKind::undefined_metric, "accuracy over an empty position set");
  double err = 0.0, ref = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double d = truth[i] - estimate[i];
    err += d * d;
    ref += truth[i] * truth[i];
  }
  require(ref > 0.0, ErrorKind::undefined_metric, "accuracy undefined for all-zero truth");
  const auto n = static_cast<double>(truth.size());
  AccuracyStats s;
  s.count = static_cast<Index>(truth.size());
  s.rmse = std::sqrt(err / n);
  s.rms = std::sqrt(ref / n);
  s.rho = (1.0 - s.rmse / s.rms) * 100.0;
  return s;
}

inline double accuracy(const std::vector<double>& truth, const std::vector<double>& estimate) {
  return accuracy_stats(truth, estimate).rho;
}

/// Accuracy over cells where `positions` is non-zero.
inline AccuracyStats accuracy_at(const MatrixXd& truth, const MatrixXd& estimate, const Mask& positions) {
  require(truth.rows() == estimate.rows() && truth.cols() == estimate.cols() &&
              positions.rows() == truth.rows() && positions.cols() == truth.cols(),
          ErrorKind::shape, "accuracy inputs differ in shape");
  std::vector<double> y, yhat;
  for (Index t = 0; t < truth.cols(); ++t)
    for (Index i = 0; i < truth.rows(); ++i)
      if (positions(i, t)) {
        y.push_back(truth(i, t));
        yhat.push_back(estimate(i, t));
      }
  return accuracy_stats(y, yhat);
}

/// Cells observed in `truth_mask` but missing in `mask`.
inline Mask missing_positions(const Mask& mask, const Mask& truth_mask) {
  require(mask.rows() == truth_mask.rows() && mask.cols() == truth_mask.cols(), ErrorKind::shape,
          "mask shapes differ");
  Mask out(mask.rows(), mask.cols());
  for (Index t = 0; t < mask.cols(); ++t)
    for (Index i = 0; i < mask.rows(); ++i)
      out(i, t) = static_cast<std::uint8_t>(mask(i, t) == 0 && truth_mask(i, t) != 0);
  return out;
}

}  // namespace btmf
