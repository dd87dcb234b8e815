#pragma once

#include <stdexcept>
#include <string>

namespace rank2s {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmptySample : public Error {
 public:
  EmptySample() : Error("sample is empty") {}
};

class NonFiniteValue : public Error {
 public:
  using Error::Error;
};

/// Duplicate values in the pooled sample while ties are rejected.
class TiesPresent : public Error {
 public:
  explicit TiesPresent(double value)
      : Error("pooled sample contains tied value " + std::to_string(value) +
              "; rerun with the midrank tie policy to rank anyway (the test is "
              "then no longer distribution free)"),
        value_(value) {}
  double value() const noexcept { return value_; }

 private:
  double value_;
};

class UnbalancedSamples : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class NonMonotoneCdf : public Error {
 public:
  using Error::Error;
};

class EnumerationTooLarge : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class InvalidParameters : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

/// Configuration validation failure; `path()` names the offending field.
class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& what)
      : Error(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace rank2s
