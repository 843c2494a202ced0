#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sgdim {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A documented precondition of an operation does not hold for its input.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// The Barthe state left the region where X is positive definite.
class DegenerateStateError : public Error {
 public:
  using Error::Error;
};

class SizeLimitError : public Error {
 public:
  using Error::Error;
};

/// A vector that should lie in a subspace sum does not.
class MembershipError : public Error {
 public:
  using Error::Error;
};

/// A triple system contradicts the arrangement it claims to describe.
class InconsistentSystemError : public Error {
 public:
  using Error::Error;
};

/// Some index appears in fewer sets than the system degree requires.
class SystemDegreeError : public Error {
 public:
  using Error::Error;
};

/// A stored object violates one of its own invariants.
class InvariantError : public Error {
 public:
  using Error::Error;
};

/// Neither branch of the decomposition could be realized within budget.
class InconclusiveError : public Error {
 public:
  using Error::Error;
};

/// Iteration, round or wall-clock budget exhausted.
class BudgetError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace sgdim
