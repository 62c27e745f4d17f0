#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace iterreg {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameters or inputs; maps to CLI exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// The stronger step-size conditions (theta >= 0, rho > 0) do not hold.
class StrictConfigError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// Non-finite iterate or blow-up; maps to CLI exit code 3.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, std::size_t iteration)
      : Error(what + " (iteration " + std::to_string(iteration) + ")"), iteration_(iteration) {}
  std::size_t iteration() const { return iteration_; }

 private:
  std::size_t iteration_;
};

/// Malformed input file; maps to CLI exit code 4.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  explicit ParseError(const std::string& what) : Error(what), line_(0) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// A saddle-point or compressed-sensing certificate fails its checks.
class CertificateError : public Error {
 public:
  using Error::Error;
};

/// A randomized generator exhausted its attempts.
class GenerationError : public Error {
 public:
  using Error::Error;
};

}  // namespace iterreg
