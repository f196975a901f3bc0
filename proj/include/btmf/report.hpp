#pragma once

#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "btmf/error.hpp"
#include "btmf/model.hpp"
#include "btmf/scenarios.hpp"

namespace btmf {

struct ReportRow {
  std::string kind;
  std::string channel;  // "ALL" for the overall row
  std::string group;
  Index count = 0;
  std::optional<AccuracyStats> stats;  // empty when undefined for the row
};

/// Accuracy per channel and overall. Cells are aligned on absolute column
/// index; a cell counts when the truth observes it, the estimate is finite,
/// and (if `input_mask` is given, aligned with `truth`) the input had it missing.
inline std::vector<ReportRow> evaluation_report(const ObservationSet& truth, const ObservationSet& estimate,
                                                const Mask* input_mask, const std::string& kind) {
  require(truth.channels() == estimate.channels(), ErrorKind::data,
          "truth and estimate have different channel counts");
  for (std::size_t i = 0; i < truth.channel_ids.size(); ++i)
    require(truth.channel_ids[i] == estimate.channel_ids[i], ErrorKind::data,
            "channel '" + estimate.channel_ids[i] + "' does not match truth channel '" +
                truth.channel_ids[i] + "'");
  if (input_mask != nullptr)
    require(input_mask->rows() == truth.channels() && input_mask->cols() == truth.length(),
            ErrorKind::data, "mask shape does not match truth");
  const Index begin = std::max(truth.first_column, estimate.first_column);
  const Index end = std::min(truth.first_column + truth.length(), estimate.first_column + estimate.length());

  std::vector<ReportRow> rows;
  std::vector<double> all_y, all_e;
  for (Index i = 0; i < truth.channels(); ++i) {
    std::vector<double> y, e;
    for (Index c = begin; c < end; ++c) {
      const Index tt = c - truth.first_column;
      const Index te = c - estimate.first_column;
      if (!truth.observed(i, tt) || !estimate.observed(i, te)) continue;
      if (input_mask != nullptr && (*input_mask)(i, tt) != 0) continue;
      y.push_back(truth.values(i, tt));
      e.push_back(estimate.values(i, te));
    }
    ReportRow row{kind, truth.channel_ids[static_cast<std::size_t>(i)],
                  truth.channel_groups[static_cast<std::size_t>(i)],
                  static_cast<Index>(y.size()), std::nullopt};
    try {
      row.stats = accuracy_stats(y, e);
    } catch (const Error& err) {
      if (err.kind() != ErrorKind::undefined_metric) throw;
      row.stats = std::nullopt;
    }
    rows.push_back(row);
    all_y.insert(all_y.end(), y.begin(), y.end());
    all_e.insert(all_e.end(), e.begin(), e.end());
  }
  ReportRow overall{kind, "ALL", "*", static_cast<Index>(all_y.size()), std::nullopt};
  try {
    overall.stats = accuracy_stats(all_y, all_e);
  } catch (const Error& err) {
    if (err.kind() != ErrorKind::undefined_metric) throw;
  }
  rows.push_back(overall);
  return rows;
}

/// CSV: kind,channel,group,count,rmse,rms,rho. Undefined rows print NA.
inline std::string format_report(const std::vector<ReportRow>& rows, bool header = true) {
  std::string out = header ? "kind,channel,group,count,rmse,rms,rho\n" : "";
  char buf[128];
  for (const ReportRow& r : rows) {
    out += r.kind + ',' + r.channel + ',' + r.group + ',';
    if (r.stats) {
      std::snprintf(buf, sizeof(buf), "%lld,%.6g,%.6g,%.2f\n", static_cast<long long>(r.stats->count),
                    r.stats->rmse, r.stats->rms, r.stats->rho);
      out += buf;
    } else {
      out += std::to_string(r.count) + ",NA,NA,NA\n";
    }
  }
  return out;
}

}  // namespace btmf
