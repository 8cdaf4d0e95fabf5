#pragma once

#include <stdexcept>
#include <string>

namespace areal {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// geometry
struct OutOfBounds : Error { using Error::Error; };
struct EmptyZone : Error { using Error::Error; };
struct RegionMismatch : Error { using Error::Error; };
struct NotAPartition : Error { using Error::Error; };
struct NotNested : Error { using Error::Error; };
struct ZeroAuxiliary : Error { using Error::Error; };

// fields / model
struct DegenerateModel : Error { using Error::Error; };
struct AllZero : Error { using Error::Error; };
struct ZeroExpectation : Error { using Error::Error; };
struct TargetStraddlesControl : Error { using Error::Error; };

// regression
struct NonpositiveMean : Error { using Error::Error; };
struct NotIdentifiable : Error { using Error::Error; };
struct UnconvergedFit : Error { using Error::Error; };
struct SingularInformation : Error { using Error::Error; };
struct ZeroFittedDenominator : Error { using Error::Error; };

// io / configuration
struct ConfigError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

} // namespace areal
