#pragma once

#include <stdexcept>
#include <string>

namespace cascadeprune {

// Base class for every error thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidMatrixError : Error { using Error::Error; };
struct SingularMatrixError : Error { using Error::Error; };
struct NotPositiveDefiniteError : Error { using Error::Error; };
struct DegenerateDowndateError : Error { using Error::Error; };
struct DimensionError : Error { using Error::Error; };
struct BoundsError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct InsufficientDataError : Error { using Error::Error; };

// Raised when a cascade node rejects every positive at its threshold.
struct TrainingCollapseError : Error {
  TrainingCollapseError(const std::string& msg, int node) : Error(msg), node_index(node) {}
  int node_index;
};

}  // namespace cascadeprune
