#pragma once

#include <stdexcept>
#include <string>

namespace snnbench {

// Base for every error raised by the library. Each subclass maps onto one
// failure family so the CLI can pick an exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

// Invalid parameters or configuration documents. CLI exit code 1.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or truncated input files.
class FormatError : public Error {
 public:
  using Error::Error;
};

class CalibrationError : public Error {
 public:
  using Error::Error;
};

// Training blew up (non-finite loss, runaway weight change).
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace snnbench
