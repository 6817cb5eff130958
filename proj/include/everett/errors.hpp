#pragma once

#include <stdexcept>
#include <string>

namespace everett {

// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error { using Error::Error; };
struct InvalidDimension : Error { using Error::Error; };
struct NotHermitian : Error { using Error::Error; };
struct ConvergenceFailure : Error { using Error::Error; };
struct DegenerateSpectrum : Error { using Error::Error; };
struct ConditionM2Violation : Error { using Error::Error; };
struct NotNormalized : Error { using Error::Error; };
struct RetriesExhausted : Error { using Error::Error; };
struct ConfigInvalid : Error { using Error::Error; };
struct IoFailure : Error { using Error::Error; };

}  // namespace everett
