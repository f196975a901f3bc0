#pragma once

// Text matrix format shared by data, masks and results:
//
//   line 1   <start timestamp, ISO-8601 UTC>,<sample interval in seconds>
//   line 2   channel,group,<column index>,<column index>,...
//   line 3+  <channel id>,<group>,<value>,<value>,...
//
// Column indices are absolute 0-based positions in the originating stream and
// must be consecutive. An empty cell or the token NaN marks a missing value.
// Numbers are written in shortest round-trip form.

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <unistd.h>

#include "btmf/error.hpp"
#include "btmf/model.hpp"

namespace btmf::io {

namespace detail {

inline Error parse_error(const std::string& source, std::size_t line, std::size_t column,
                         const std::string& message) {
  return Error(ErrorKind::data, source + ":" + std::to_string(line) + ":" + std::to_string(column) +
                                    ": " + message);
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  for (;;) {
    const std::size_t comma = line.find(',', pos);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(pos));
      return out;
    }
    out.push_back(line.substr(pos, comma - pos));
    pos = comma + 1;
  }
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
bool parse_number(std::string_view text, T& value) {
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  return ec == std::errc() && ptr == last;
}

inline void append_double(std::string& out, double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, ptr);
}

}  // namespace detail

/// Parses "YYYY-MM-DDTHH:MM:SS" with an optional trailing "Z".
inline Timestamp parse_timestamp(std::string_view text) {
  text = detail::trim(text);
  if (!text.empty() && text.back() == 'Z') text.remove_suffix(1);
  int y = 0;
  unsigned mo = 0, d = 0, h = 0, mi = 0, s = 0;
  char tail = 0;
  const std::string copy(text);
  if (std::sscanf(copy.c_str(), "%d-%u-%uT%u:%u:%u%c", &y, &mo, &d, &h, &mi, &s, &tail) != 6)
    throw Error(ErrorKind::data, "malformed timestamp '" + copy + "'");
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{mo},
                                        std::chrono::day{d}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 59)
    throw Error(ErrorKind::data, "invalid timestamp '" + copy + "'");
  return std::chrono::sys_days{ymd} + std::chrono::hours{h} + std::chrono::minutes{mi} +
         std::chrono::seconds{s};
}

inline std::string format_timestamp(Timestamp ts) {
  const auto day = std::chrono::floor<std::chrono::days>(ts);
  const std::chrono::year_month_day ymd{day};
  const auto secs = (ts - day).count();
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02lld:%02lld:%02lldZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<long long>(secs / 3600), static_cast<long long>((secs / 60) % 60),
                static_cast<long long>(secs % 60));
  return buf;
}

/// Serializes an observation set; missing cells are written empty.
inline std::string format_matrix(const ObservationSet& obs) {
  obs.validate();
  std::string out;
  out.reserve(static_cast<std::size_t>(obs.values.size()) * 12 + 256);
  out += format_timestamp(obs.start);
  out += ',';
  out += std::to_string(obs.sample_interval.count());
  out += "\nchannel,group";
  for (Index t = 0; t < obs.length(); ++t) {
    out += ',';
    out += std::to_string(obs.first_column + t);
  }
  out += '\n';
  for (Index i = 0; i < obs.channels(); ++i) {
    const auto& id = obs.channel_ids[static_cast<std::size_t>(i)];
    const auto& group = obs.channel_groups[static_cast<std::size_t>(i)];
    require(id.find_first_of(",\n") == std::string::npos &&
                group.find_first_of(",\n") == std::string::npos,
            ErrorKind::data, "channel labels may not contain commas or newlines");
    out += id;
    out += ',';
    out += group;
    for (Index t = 0; t < obs.length(); ++t) {
      out += ',';
      if (obs.observed(i, t)) detail::append_double(out, obs.values(i, t));
    }
    out += '\n';
  }
  return out;
}

inline ObservationSet parse_matrix(std::string_view text, const std::string& source = "<input>") {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    pos = nl + 1;
  }
  while (!lines.empty() && detail::trim(lines.back()).empty()) lines.pop_back();
  if (lines.size() < 3) throw detail::parse_error(source, lines.size() + 1, 1, "expected header rows and at least one channel");

  ObservationSet obs;
  {
    const auto fields = detail::split_fields(lines[0]);
    if (fields.size() != 2) throw detail::parse_error(source, 1, 1, "expected '<timestamp>,<interval seconds>'");
    try {
      obs.start = parse_timestamp(fields[0]);
    } catch (const Error& e) {
      throw detail::parse_error(source, 1, 1, e.what());
    }
    long long interval = 0;
    if (!detail::parse_number(detail::trim(fields[1]), interval) || interval <= 0)
      throw detail::parse_error(source, 1, 2, "sample interval must be a positive integer");
    obs.sample_interval = std::chrono::seconds{interval};
  }

  const auto header = detail::split_fields(lines[1]);
  if (header.size() < 3) throw detail::parse_error(source, 2, 1, "expected 'channel,group,<indices...>'");
  const Index t_len = static_cast<Index>(header.size()) - 2;
  for (Index t = 0; t < t_len; ++t) {
    long long idx = 0;
    if (!detail::parse_number(detail::trim(header[static_cast<std::size_t>(t + 2)]), idx))
      throw detail::parse_error(source, 2, static_cast<std::size_t>(t + 3), "column index is not an integer");
    if (t == 0) {
      obs.first_column = idx;
    } else if (idx != obs.first_column + t) {
      throw detail::parse_error(source, 2, static_cast<std::size_t>(t + 3), "column indices must be consecutive");
    }
  }

  const Index m = static_cast<Index>(lines.size()) - 2;
  obs.values.resize(m, t_len);
  obs.mask.resize(m, t_len);
  std::map<std::string, std::size_t, std::less<>> seen;
  for (Index i = 0; i < m; ++i) {
    const std::size_t line_no = static_cast<std::size_t>(i) + 3;
    const auto fields = detail::split_fields(lines[static_cast<std::size_t>(i) + 2]);
    if (static_cast<Index>(fields.size()) != t_len + 2)
      throw detail::parse_error(source, line_no, fields.size(),
                                "row has " + std::to_string(fields.size()) + " fields, expected " +
                                    std::to_string(t_len + 2));
    const std::string id(detail::trim(fields[0]));
    if (id.empty()) throw detail::parse_error(source, line_no, 1, "empty channel id");
    if (const auto it = seen.find(id); it != seen.end())
      throw detail::parse_error(source, line_no, 1,
                                "duplicate channel id '" + id + "' (first on line " +
                                    std::to_string(it->second) + ")");
    seen.emplace(id, line_no);
    obs.channel_ids.push_back(id);
    obs.channel_groups.emplace_back(detail::trim(fields[1]));
    for (Index t = 0; t < t_len; ++t) {
      const std::string_view cell = detail::trim(fields[static_cast<std::size_t>(t + 2)]);
      if (cell.empty() || cell == "NaN" || cell == "nan") {
        obs.values(i, t) = std::numeric_limits<double>::quiet_NaN();
        obs.mask(i, t) = 0;
        continue;
      }
      double v = 0.0;
      if (!detail::parse_number(cell, v) || !std::isfinite(v))
        throw detail::parse_error(source, line_no, static_cast<std::size_t>(t + 3),
                                  "unparseable number '" + std::string(cell) + "'");
      obs.values(i, t) = v;
      obs.mask(i, t) = 1;
    }
  }
  return obs;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::data, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes through a temporary file in the same directory, then renames.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::data, "cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(ErrorKind::data, "write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::data, "cannot move result into '" + path.string() + "': " + ec.message());
}

inline ObservationSet load_matrix(const std::filesystem::path& path) {
  ObservationSet obs = parse_matrix(read_file(path), path.string());
  return obs;
}

inline void write_matrix(const std::filesystem::path& path, const ObservationSet& obs) {
  write_file_atomic(path, format_matrix(obs));
}

/// Observation set carrying `values` (NaN = missing) with the labels of
/// `like`, positioned at absolute column `first_column`.
inline ObservationSet labelled_matrix(const ObservationSet& like, const MatrixXd& values,
                                      Index first_column) {
  require(values.rows() == like.channels(), ErrorKind::shape, "row count does not match labels");
  ObservationSet out;
  out.values = values;
  out.mask.resize(values.rows(), values.cols());
  for (Index t = 0; t < values.cols(); ++t)
    for (Index i = 0; i < values.rows(); ++i)
      out.mask(i, t) = static_cast<std::uint8_t>(std::isfinite(values(i, t)));
  out.channel_ids = like.channel_ids;
  out.channel_groups = like.channel_groups;
  out.sample_interval = like.sample_interval;
  out.start = like.start + like.sample_interval * (first_column - like.first_column);
  out.first_column = first_column;
  return out;
}

/// Mask as a 0/1 matrix file.
inline ObservationSet mask_matrix(const ObservationSet& like, const Mask& mask) {
  return labelled_matrix(like, mask.cast<double>(), like.first_column);
}

inline Mask mask_from_matrix(const ObservationSet& file) {
  Mask mask(file.channels(), file.length());
  for (Index t = 0; t < file.length(); ++t)
    for (Index i = 0; i < file.channels(); ++i) {
      const double v = file.values(i, t);
      require(file.observed(i, t) && (v == 0.0 || v == 1.0), ErrorKind::data,
              "mask file cells must be 0 or 1");
      mask(i, t) = static_cast<std::uint8_t>(v);
    }
  return mask;
}

/// Long format: one line per (channel, column) with mean, std and the
/// +-3 sd band; `truth`, when given, adds the observed value (empty if missing).
inline std::string format_series(const ObservationSet& like, const PredictionResult& result,
                                 const ObservationSet* truth = nullptr) {
  std::string out = "channel,group,column,timestamp,mean,std,lower_3sd,upper_3sd";
  if (truth != nullptr) out += ",truth";
  out += '\n';
  for (Index i = 0; i < result.mean.rows(); ++i) {
    for (Index t = 0; t < result.mean.cols(); ++t) {
      const Index column = result.first_column + t;
      const double mu = result.mean(i, t);
      const double sd = result.std(i, t);
      out += like.channel_ids[static_cast<std::size_t>(i)];
      out += ',';
      out += like.channel_groups[static_cast<std::size_t>(i)];
      out += ',';
      out += std::to_string(column);
      out += ',';
      out += format_timestamp(like.start + like.sample_interval * (column - like.first_column));
      for (double v : {mu, sd, mu - 3.0 * sd, mu + 3.0 * sd}) {
        out += ',';
        if (std::isfinite(v)) detail::append_double(out, v);
      }
      if (truth != nullptr) {
        out += ',';
        const Index tc = column - truth->first_column;
        if (tc >= 0 && tc < truth->length() && truth->observed(i, tc))
          detail::append_double(out, truth->values(i, tc));
      }
      out += '\n';
    }
  }
  return out;
}

/// Flat `key = value` text; '#' starts a comment line.
inline std::map<std::string, std::string> parse_key_values(std::string_view text,
                                                           const std::string& source = "<config>") {
  std::map<std::string, std::string> out;
  std::size_t pos = 0, line_no = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    ++line_no;
    const std::string_view line = detail::trim(text.substr(pos, nl - pos));
    pos = nl + 1;
    if (line.empty() || line.front() == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos)
      throw Error(ErrorKind::config, source + ":" + std::to_string(line_no) + ": expected key = value");
    const std::string key(detail::trim(line.substr(0, eq)));
    if (key.empty())
      throw Error(ErrorKind::config, source + ":" + std::to_string(line_no) + ": empty key");
    out[key] = std::string(detail::trim(line.substr(eq + 1)));
  }
  return out;
}

}  // namespace btmf::io
