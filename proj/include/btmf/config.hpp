#pragma once

// Run configuration built from flat dotted keys. Matrix-valued prior keys take
// either one scalar (scaled identity, or a constant vector for mu0) or a
// comma-separated row-major list of every entry.

#include <charconv>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "btmf/error.hpp"
#include "btmf/forecast.hpp"
#include "btmf/gibbs.hpp"
#include "btmf/incremental.hpp"
#include "btmf/model.hpp"

namespace btmf {

using KeyValues = std::map<std::string, std::string>;

struct RunConfig {
  Index rank = 8;
  std::vector<int> lags{1, 2};
  ChainConfig chain;
  Index increment = 4320;
  Index critical = 12 * 4320;
  Index horizon = 0;
  Index refresh_interval = -1;  // negative: use increment
  PrecisionScope precision_scope = PrecisionScope::window;
  KeyValues prior_overrides;

  Index effective_refresh() const { return refresh_interval < 0 ? increment : refresh_interval; }

  PriorConfig prior() const;

  IncrementalConfig incremental() const {
    IncrementalConfig out;
    out.rank = rank;
    out.lags = lags;
    out.prior = prior();
    out.chain = chain;
    out.horizon = horizon;
    out.precision_scope = precision_scope;
    return out;
  }
};

namespace detail {

inline std::vector<double> parse_number_list(const std::string& key, std::string_view text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find(',', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view item = text.substr(pos, end - pos);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || ec != std::errc() || ptr != item.data() + item.size())
      throw Error(ErrorKind::config, "key '" + key + "': '" + std::string(item) + "' is not a number");
    out.push_back(v);
    pos = end + 1;
  }
  return out;
}

inline double parse_real(const std::string& key, const std::string& text) {
  const auto v = parse_number_list(key, text);
  if (v.size() != 1) throw Error(ErrorKind::config, "key '" + key + "' expects one number");
  return v[0];
}

inline std::int64_t parse_integer(const std::string& key, const std::string& text) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size())
    throw Error(ErrorKind::config, "key '" + key + "' expects an integer, got '" + text + "'");
  return v;
}

inline MatrixXd parse_prior_matrix(const std::string& key, const std::string& text, Index rows,
                                   Index cols, bool identity_scalar) {
  const auto v = parse_number_list(key, text);
  if (v.size() == 1) {
    if (identity_scalar) return v[0] * MatrixXd::Identity(rows, cols);
    return MatrixXd::Constant(rows, cols, v[0]);
  }
  if (static_cast<Index>(v.size()) != rows * cols)
    throw Error(ErrorKind::config, "key '" + key + "' expects 1 or " + std::to_string(rows * cols) +
                                       " numbers, got " + std::to_string(v.size()));
  MatrixXd m(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) m(r, c) = v[static_cast<std::size_t>(r * cols + c)];
  return m;
}

}  // namespace detail

inline PriorConfig RunConfig::prior() const {
  const Index k = rank;
  const Index kd = rank * static_cast<Index>(lags.size());
  PriorConfig p = PriorConfig::defaults(k, static_cast<Index>(lags.size()));
  for (const auto& [key, value] : prior_overrides) {
    if (key == "prior.mu0") p.mu0 = detail::parse_prior_matrix(key, value, k, 1, false);
    else if (key == "prior.beta0") p.beta0 = detail::parse_real(key, value);
    else if (key == "prior.W0") p.W0 = detail::parse_prior_matrix(key, value, k, k, true);
    else if (key == "prior.v0") p.v0 = detail::parse_real(key, value);
    else if (key == "prior.Lambda0") p.Lambda0 = detail::parse_prior_matrix(key, value, kd, k, false);
    else if (key == "prior.V0") p.V0 = detail::parse_prior_matrix(key, value, kd, kd, true);
    else if (key == "prior.Psi0") p.Psi0 = detail::parse_prior_matrix(key, value, k, k, true);
    else if (key == "prior.a0") p.a0 = detail::parse_real(key, value);
    else if (key == "prior.b0") p.b0 = detail::parse_real(key, value);
    else throw Error(ErrorKind::config, "unknown key '" + key + "'");
  }
  try {
    p.validate(static_cast<Index>(lags.size()));
  } catch (const Error& e) {
    throw Error(ErrorKind::config, std::string("prior: ") + e.what());
  }
  return p;
}

/// Applies `values` on top of `base`. Unknown keys are configuration errors.
inline RunConfig apply_config(RunConfig base, const KeyValues& values) {
  using detail::parse_integer;
  for (const auto& [key, value] : values) {
    if (key == "model.rank") {
      base.rank = parse_integer(key, value);
    } else if (key == "model.lags") {
      base.lags.clear();
      for (double l : detail::parse_number_list(key, value)) {
        if (l != static_cast<double>(static_cast<int>(l)))
          throw Error(ErrorKind::config, "model.lags entries must be integers");
        base.lags.push_back(static_cast<int>(l));
      }
    } else if (key == "chain.n_iters_impute") {
      base.chain.n_iters_impute = parse_integer(key, value);
    } else if (key == "chain.burn_in_impute") {
      base.chain.burn_in_impute = parse_integer(key, value);
    } else if (key == "chain.n_iters_forecast") {
      base.chain.n_iters_forecast = parse_integer(key, value);
    } else if (key == "chain.burn_in_forecast") {
      base.chain.burn_in_forecast = parse_integer(key, value);
    } else if (key == "chain.seed") {
      std::uint64_t seed = 0;
      const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), seed);
      if (value.empty() || ec != std::errc() || ptr != value.data() + value.size())
        throw Error(ErrorKind::config, "chain.seed expects an unsigned integer");
      base.chain.seed = seed;
    } else if (key == "window.increment") {
      base.increment = parse_integer(key, value);
    } else if (key == "window.critical") {
      base.critical = parse_integer(key, value);
    } else if (key == "forecast.horizon") {
      base.horizon = parse_integer(key, value);
    } else if (key == "forecast.refresh_interval") {
      base.refresh_interval = parse_integer(key, value);
    } else if (key == "forecast.precision_scope") {
      if (value == "window") base.precision_scope = PrecisionScope::window;
      else if (value == "column") base.precision_scope = PrecisionScope::column;
      else throw Error(ErrorKind::config, "forecast.precision_scope must be 'window' or 'column'");
    } else if (key.rfind("prior.", 0) == 0) {
      base.prior_overrides[key] = value;
    } else {
      throw Error(ErrorKind::config, "unknown key '" + key + "'");
    }
  }
  require(base.rank >= 1, ErrorKind::config, "model.rank must be at least 1");
  require(base.horizon >= 0, ErrorKind::config, "forecast.horizon must be non-negative");
  try {
    validate_lags(base.lags);
    base.chain.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::config, e.what());
  }
  base.prior();
  return base;
}

}  // namespace btmf
