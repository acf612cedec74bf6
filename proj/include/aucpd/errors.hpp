#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace aucpd {

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct LabelError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct EmptyInputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A class (or class pair) required by a metric is absent from the data.
struct ClassMissingError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NotReadyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
  ParseError(const std::string& msg, std::size_t line)
      : std::runtime_error(msg + " (line " + std::to_string(line) + ")"), line_number(line) {}
  std::size_t line_number;
};

struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg, long long step = -1)
      : std::runtime_error(step >= 0 ? msg + " (step " + std::to_string(step) + ")" : msg),
        step_number(step) {}
  long long step_number;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace aucpd
