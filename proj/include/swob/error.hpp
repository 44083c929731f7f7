#pragma once

#include <stdexcept>
#include <string>

namespace swob {

// Base type for every error the library throws, so callers can catch one thing.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A value is outside its legal range (losses, dimensions, probabilities, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// A learner configuration cannot be resolved into a runnable schedule.
class SpecError : public Error {
 public:
  using Error::Error;
};

// An observation was charged beyond the available budget. Always fatal: the
// engine never silently clamps a schedule that overspends.
class BudgetViolation : public Error {
 public:
  using Error::Error;
};

// A loss estimate came out negative, non-finite, or structurally invalid.
class EstimatorError : public Error {
 public:
  using Error::Error;
};

// Malformed input text: config files, instance CSV files.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Too few data points for a requested fit or breakpoint search.
class InsufficientData : public Error {
 public:
  using Error::Error;
};

}  // namespace swob
