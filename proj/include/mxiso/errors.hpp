#pragma once

#include <stdexcept>
#include <string>

namespace mxiso {

/// Bad input: malformed files, inconsistent shapes, out-of-range parameters.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A request exceeded a hard size or cost limit (n > 8, oracle cost guard,
/// rejection budget).
class ResourceLimitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An internal cross-check disagreed with its oracle.
class VerificationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The integrator produced a non-finite value.
class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mxiso
