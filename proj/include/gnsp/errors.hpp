#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gnsp {

/// Out-of-range model parameter (alpha, n, time constants, ...).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Caller broke a documented precondition (non-symmetric input, dimension
/// mismatch, incompatible step size).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A trial produced no spikes inside the response window.
class ZeroResponseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Normal equations could not be solved (lambda = 0 with collinear features).
class SingularSystemError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Not enough data to run the requested evaluation.
class InsufficientDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ParseErrorKind {
  kIo,
  kMissingColumn,
  kNonNumeric,
  kUnknownLabel,
  kLengthMismatch,
  kBadBlock,
  kMalformed,
};

const char* to_string(ParseErrorKind kind);

/// Input file did not match its schema. `row` is 1-based and counts the
/// header line; 0 means the error is not tied to a row.
class ParseError : public std::runtime_error {
 public:
  ParseError(ParseErrorKind kind, std::size_t row, const std::string& what);

  ParseErrorKind kind() const { return kind_; }
  std::size_t row() const { return row_; }

 private:
  ParseErrorKind kind_;
  std::size_t row_;
};

/// Bad experiment configuration (maps to CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gnsp
