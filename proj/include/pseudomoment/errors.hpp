#pragma once

#include <stdexcept>
#include <string>

namespace pseudomoment {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A mathematical precondition does not hold. The message names it.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A prime table or Steinhaus sample does not reach far enough.
class CoverageError : public Error {
 public:
  using Error::Error;
};

/// Requested work exceeds a configured memory or time ceiling.
class ResourceError : public Error {
 public:
  using Error::Error;
};

class EmptyTableError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// A table-backed coefficient function was asked for an absent prime power.
class MissingValueError : public Error {
 public:
  using Error::Error;
};

/// A local Euler factor series has no contracting majorant.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

class IllConditionedError : public Error {
 public:
  using Error::Error;
};

class DimensionalityError : public Error {
 public:
  using Error::Error;
};

/// Quadrature refused: the integrand may be singular on the grid.
class SingularIntegrandError : public Error {
 public:
  using Error::Error;
};

/// A Monte Carlo estimate is too noisy for the requested diagnostic.
class UnderSampledError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline void require(bool condition, const std::string& what) {
  if (!condition) throw DomainError("precondition violated: " + what);
}

}  // namespace detail
}  // namespace pseudomoment
