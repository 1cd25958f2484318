#pragma once

#include <stdexcept>
#include <string>

namespace driftlab {

// Usage / parameter problems (CLI exit code 2).
struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

// Grid too coarse for the requested object.
struct ResolutionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Something left the computational rectangle.
struct TruncationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A numerical certificate or scan did not hold (CLI exit code 1).
struct ScientificFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace driftlab
