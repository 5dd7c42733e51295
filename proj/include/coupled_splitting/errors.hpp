#pragma once

#include <stdexcept>
#include <string>

namespace coupled_splitting {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed instance: dimension mismatch, asymmetric H, bad prox parameters.
class StructuralError : public Error {
 public:
  StructuralError(const std::string& field, const std::string& what)
      : Error(field + ": " + what), field_(field) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Operation called with arguments outside its contract.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// A block subproblem or permutation matrix is singular.
class ConditionError : public Error {
 public:
  using Error::Error;
};

/// Point outside the domain of a separable term.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Operation not available for the given term kinds.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// Linear KKT system has no solution.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

}  // namespace coupled_splitting
