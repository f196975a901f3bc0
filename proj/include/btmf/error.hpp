#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace btmf {

enum class ErrorKind {
  shape,
  decomposition,
  invalid_parameter,
  insufficient_history,
  out_of_range,
  config,
  data,
  infeasible_spec,
  undefined_metric,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::shape: return "shape_error";
    case ErrorKind::decomposition: return "decomposition_failure";
    case ErrorKind::invalid_parameter: return "invalid_parameter";
    case ErrorKind::insufficient_history: return "insufficient_history";
    case ErrorKind::out_of_range: return "out_of_range";
    case ErrorKind::config: return "config_error";
    case ErrorKind::data: return "data_error";
    case ErrorKind::infeasible_spec: return "infeasible_spec";
    case ErrorKind::undefined_metric: return "undefined_metric";
  }
  return "error";
}

/// Single exception type for the library; the kind drives CLI exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  /// Same error with a location prefix, e.g. "window 3: iteration 12: ...".
  Error with_context(std::string_view context) const {
    return Error(kind_, std::string(context) + ": " + what());
  }

 private:
  ErrorKind kind_;
};

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) throw Error(kind, message);
}

}  // namespace btmf
