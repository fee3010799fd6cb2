#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace fracgs {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GridMismatch : public Error {
 public:
  using Error::Error;
};

class NonFiniteValue : public Error {
 public:
  using Error::Error;
};

/// The quadratic part of Phi is not positive along the requested ray
/// (lambda is at or above the bottom of the linear spectrum).
class InadmissibleLambda : public Error {
 public:
  using Error::Error;
};

class ZeroField : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// Collects every violated constraint instead of stopping at the first one.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> violations)
      : Error(join(violations)), violations_(std::move(violations)) {}

  const std::vector<std::string>& violations() const { return violations_; }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string out = "invalid configuration:";
    for (const auto& s : v) out += "\n  - " + s;
    return out;
  }
  std::vector<std::string> violations_;
};

/// A rescaling frame cannot be represented on the requested grid.
class FrameError : public Error {
 public:
  FrameError(const std::string& what, double suggested_half_width)
      : Error(what), suggested_half_width_(suggested_half_width) {}
  double suggested_half_width() const { return suggested_half_width_; }

 private:
  double suggested_half_width_;
};

}  // namespace fracgs
