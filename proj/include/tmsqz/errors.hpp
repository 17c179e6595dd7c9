#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace tmsqz {

// Input errors (bad shapes, counts, mismatched grids) are std::invalid_argument;
// values outside a mathematical domain are std::domain_error. The two types
// below carry extra context.

/// A pulse-train specification that cannot be realized under the calibration.
class CompilationError : public std::runtime_error {
 public:
  CompilationError(std::optional<std::size_t> slot, const std::string& what)
      : std::runtime_error(what), slot_(slot) {}

  /// Offending slot, or nullopt when the whole specification is at fault.
  std::optional<std::size_t> slot() const { return slot_; }

 private:
  std::optional<std::size_t> slot_;
};

/// Tomography data that does not constrain the covariance.
class IllConditionedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tmsqz
