#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace hst {

/// Bad caller input: dimension mismatches, empty samples, malformed specs.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A computation produced NaN/Inf or otherwise left the representable range.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// The requested operation needs a capability the model/config does not have
/// (e.g. an exact log-density, or an enumerable hidden space).
struct CapabilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// File system / parsing failures.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Optimization diverged; carries the objective curve recorded so far.
class TrainingError : public std::runtime_error {
 public:
  TrainingError(const std::string& what, std::vector<double> curve)
      : std::runtime_error(what), curve_(std::move(curve)) {}
  const std::vector<double>& curve() const { return curve_; }

 private:
  std::vector<double> curve_;
};

}  // namespace hst
