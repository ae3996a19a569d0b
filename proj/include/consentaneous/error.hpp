#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace consentaneous {

// Argument outside the mathematical domain of a model function.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// The integrator produced a non-finite state.
class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, std::size_t step)
      : std::runtime_error(what + " at step " + std::to_string(step)), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

// Invalid parameters, grids or experiment configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Input series too short for the requested operation.
class SizeError : public std::length_error {
 public:
  using std::length_error::length_error;
};

// Series with zero dispersion cannot be thresholded in std units.
class DegenerateSeriesError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FitError : public std::runtime_error {
 public:
  FitError(const std::string& what, std::size_t usable)
      : std::runtime_error(what + " (usable bins: " + std::to_string(usable) + ")"), usable_(usable) {}
  std::size_t usable_bins() const { return usable_; }

 private:
  std::size_t usable_;
};

}  // namespace consentaneous
