#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hmmifs {

// Bad input: malformed config, dimension mismatch, invalid kernel.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Failure of a numerical procedure on otherwise valid input.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Every state assigns density zero to the observation at `step`.
class ImpossibleObservation : public NumericalError {
 public:
  explicit ImpossibleObservation(std::size_t step)
      : NumericalError("impossible observation at step " + std::to_string(step)),
        step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

}  // namespace hmmifs
