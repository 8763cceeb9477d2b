#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cigen {

// Incompatible matrix/network dimensions.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Input that a statistic or estimator cannot handle (constant columns, too few rows, NaN).
class DegenerateInputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Invalid configuration or call contract violation.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class TrainingDivergedError : public std::runtime_error {
 public:
  TrainingDivergedError(const std::string& what, std::size_t epoch)
      : std::runtime_error(what), epoch_(epoch) {}
  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t epoch_;
};

// The CRT baseline only models univariate X.
class UnsupportedBaselineError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class BandUnreachableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed CSV or plan file; carries 1-based line and column (0 when not applicable).
class SchemaError : public std::runtime_error {
 public:
  SchemaError(const std::string& what, std::size_t line = 0, std::size_t column = 0)
      : std::runtime_error(what), line_(line), column_(column) {}
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

}  // namespace cigen
