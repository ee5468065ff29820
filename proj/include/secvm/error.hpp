#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace secvm {

// Every error raised by the library derives from Error so callers (the CLI in
// particular) can map categories onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input data that cannot be used: unreadable, malformed or empty.
class DataError : public Error {
 public:
  using Error::Error;
};

// Malformed corpus input. Carries the 1-based line number.
class ParseError : public DataError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Invalid configuration value (probability outside (0,1), lambda <= 0, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Sparse index does not fit the weight vector.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Wire bytes that do not decode to a valid message.
class DecodeError : public Error {
 public:
  using Error::Error;
};

// A send window that is empty or already over.
class SchedulingError : public Error {
 public:
  using Error::Error;
};

// Arguments outside a formula's domain (bounds, oracles, planner).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Protocol misuse, e.g. closing an iteration before its deadline.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

// File could not be read or written.
class IoError : public DataError {
 public:
  using DataError::DataError;
};

// An internal invariant was observed to be broken.
class InvariantError : public Error {
 public:
  using Error::Error;
};

}  // namespace secvm
