#pragma once

#include <stdexcept>
#include <string>

namespace lcnf {

/// Error categories surfaced through the C API and the CLI exit code.
enum class ErrorKind {
  Config = 2,   // invalid parameters, strict-config violations
  Numeric = 3,  // NaN/Inf, divergence, singular systems
  Io = 4,       // unreadable/truncated/malformed files
  Invalid = 5,  // shape mismatches and other contract violations
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(ErrorKind::Numeric, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::Io, what) {}
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error(ErrorKind::Invalid, what) {}
};

}  // namespace lcnf
