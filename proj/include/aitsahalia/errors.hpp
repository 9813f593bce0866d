#pragma once

#include <stdexcept>
#include <string>

namespace aitsahalia {

/// Argument outside the positive half-line (or another mathematical domain).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A documented precondition of an operation does not hold.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The implicit-step solver did not converge; carries the last bracket.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double lo, double hi)
      : std::runtime_error(what), lo_(lo), hi_(hi) {}

  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }

 private:
  double lo_;
  double hi_;
};

/// A simulated path could not be completed; the whole experiment is aborted.
class SimulationAbort : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace aitsahalia
