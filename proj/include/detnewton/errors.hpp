#pragma once

#include <stdexcept>
#include <string>

namespace detnewton {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A caller broke a documented precondition (bad index, dimension
/// mismatch, parameter out of range).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// An iterative numerical routine failed to converge; carries the
/// residual that was left over.
class NumericalFailure : public Error {
 public:
  NumericalFailure(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_ = 0.0;
};

/// Power-set enumeration was requested for a dimension too large to
/// enumerate.
class EnumerationTooLarge : public Error {
 public:
  using Error::Error;
};

/// A matrix required to be positive semi-definite has a negative
/// eigenvalue beyond tolerance.
class NotPsd : public Error {
 public:
  using Error::Error;
};

/// The smallest eigenvalue is not positive where strong convexity is
/// required.
class NotStronglyConvex : public Error {
 public:
  using Error::Error;
};

/// Requested expected subset size cannot be met by any alpha.
class InfeasibleSize : public Error {
 public:
  using Error::Error;
};

/// The objective blew up during optimization.
class Divergence : public Error {
 public:
  Divergence(const std::string& what, int iteration)
      : Error(what), iteration_(iteration) {}
  int iteration() const { return iteration_; }

 private:
  int iteration_ = 0;
};

/// A problem does not support the requested algorithm variant.
class UnsupportedVariant : public Error {
 public:
  using Error::Error;
};

/// Config file could not be parsed; carries the offending line number.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, int line)
      : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  explicit ConfigError(const std::string& what) : Error(what), line_(0) {}
  int line() const { return line_; }

 private:
  int line_ = 0;
};

}  // namespace detnewton
