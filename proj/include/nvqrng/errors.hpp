#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace nvqrng {

/// Raised when a closed-form photon-statistics approximation is evaluated
/// outside the regime it was derived for (interval not short against 1/gamma1,
/// mean photon number not small, probabilities leaving [0, 1]).
class ModelValidityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Requested physical configuration cannot be realized by the simulator.
class InfeasibleError : public std::runtime_error {
 public:
  explicit InfeasibleError(const std::string& what, double nearest_beta = 0.0)
      : std::runtime_error(what), nearest_beta_(nearest_beta) {}

  /// Largest shelving strength reachable for the requested rates, or 0 when
  /// the failure is not about beta.
  double nearest_beta() const noexcept { return nearest_beta_; }

 private:
  double nearest_beta_;
};

/// Malformed stream or byte input (unsorted timestamps, too-short samples).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Invalid configuration value or combination.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Least-squares fit failed for every emitter count scanned.
class FitError : public std::runtime_error {
 public:
  FitError(const std::string& what, std::vector<std::string> diagnostics)
      : std::runtime_error(what), diagnostics_(std::move(diagnostics)) {}

  const std::vector<std::string>& diagnostics() const noexcept { return diagnostics_; }

 private:
  std::vector<std::string> diagnostics_;
};

}  // namespace nvqrng
