#pragma once

#include <stdexcept>
#include <string>

namespace gpushare {

// Bad or incomplete configuration: missing profile entries, unknown policy, bad paths.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation.
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

// A value violates a declared invariant (xi < 1, empty histogram, duplicate ids).
struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct FitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Gang or capacity constraint broken. Always a scheduler bug.
struct ConstraintError : std::logic_error {
  using std::logic_error::logic_error;
};

// No memory-feasible sub-batch exists for a pair of co-located jobs.
struct InfeasiblePairError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Simulation invariant audit failed at an event boundary.
struct InvariantViolation : std::logic_error {
  using std::logic_error::logic_error;
};

struct ParseError : std::runtime_error {
  ParseError(const std::string& what, std::size_t record)
      : std::runtime_error("record " + std::to_string(record) + ": " + what), record_(record) {}

  std::size_t record() const noexcept { return record_; }

 private:
  std::size_t record_;
};

}  // namespace gpushare
