#pragma once

#include <stdexcept>
#include <string>

namespace dkspde {

/// Bad user input: unknown preset, malformed config, unresolved wavevector.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke a documented precondition (shape mismatch, misaligned bins).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Quadrature or other numerical procedure failed to converge.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Requested allocation exceeds the configured memory budget.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A time step was refused (CFL violation) or produced non-finite values.
class StepError : public std::runtime_error {
 public:
  StepError(const std::string& what, long long last_good_step, double last_good_time)
      : std::runtime_error(what), last_good_step_(last_good_step), last_good_time_(last_good_time) {}

  long long last_good_step() const noexcept { return last_good_step_; }
  double last_good_time() const noexcept { return last_good_time_; }

 private:
  long long last_good_step_;
  double last_good_time_;
};

}  // namespace dkspde
