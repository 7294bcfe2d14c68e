#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace mcfipm {

/// Malformed input text; carries the 1-based line number of the offending line.
class ParseError : public std::runtime_error {
public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

/// A structurally well-formed instance that violates a model invariant.
class ValidationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Base class for numerical failures of the solver stack.
class SolverError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Krylov iteration did not reach its tolerance. The residual history is kept
/// for diagnostics.
class KrylovError : public SolverError {
public:
  KrylovError(const std::string& what, std::vector<double> history)
      : SolverError(what), history_(std::move(history)) {}
  const std::vector<double>& history() const noexcept { return history_; }

private:
  std::vector<double> history_;
};

/// Input outside the domain an algorithm supports (e.g. fractional data for
/// an exact integer method).
class UnsupportedInputError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

class StallError : public SolverError {
public:
  using SolverError::SolverError;
};

class InfeasibleError : public SolverError {
public:
  using SolverError::SolverError;
};

class NonConvergenceError : public SolverError {
public:
  NonConvergenceError(const std::string& what, std::string state_dump)
      : SolverError(what), dump_(std::move(state_dump)) {}
  const std::string& state_dump() const noexcept { return dump_; }

private:
  std::string dump_;
};

}  // namespace mcfipm
