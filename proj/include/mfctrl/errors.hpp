#pragma once

#include <stdexcept>
#include <string>

namespace mfctrl {

// Caller broke a precondition (dimensions, non-finite input, bad config value).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Base for failures that come out of the numerics rather than the caller.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SingularSystemError : public NumericalFailure {
 public:
  SingularSystemError(const std::string& what, double condition_number)
      : NumericalFailure(what), condition_number_(condition_number) {}
  double condition_number() const { return condition_number_; }

 private:
  double condition_number_;
};

class RegularizationExhausted : public NumericalFailure {
 public:
  using NumericalFailure::NumericalFailure;
};

class SynthesisFailure : public NumericalFailure {
 public:
  SynthesisFailure(const std::string& what, int time_index)
      : NumericalFailure(what), time_index_(time_index) {}
  int time_index() const { return time_index_; }

 private:
  int time_index_;
};

class FitFailure : public NumericalFailure {
 public:
  using NumericalFailure::NumericalFailure;
};

}  // namespace mfctrl
