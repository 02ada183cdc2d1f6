#pragma once

#include <stdexcept>
#include <string>

namespace coreg {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Vector length does not match the operator or basis dimension.
class DimensionError : public Error {
 public:
  DimensionError(const std::string& what, long expected, long actual)
      : Error(what + ": expected length " + std::to_string(expected) + ", got " +
              std::to_string(actual)),
        expected_(expected),
        actual_(actual) {}

  long expected() const { return expected_; }
  long actual() const { return actual_; }

 private:
  long expected_;
  long actual_;
};

// Dense materialization would exceed the configured entry budget.
class BudgetError : public Error {
 public:
  using Error::Error;
};

// Iterative solve failed (non-finite iterate, inner CG breakdown, ...).
class SolverError : public Error {
 public:
  using Error::Error;
};

inline void check_length(const char* what, long expected, long actual) {
  if (expected != actual) throw DimensionError(what, expected, actual);
}

}  // namespace coreg
