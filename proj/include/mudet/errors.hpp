#pragma once

#include <stdexcept>
#include <string>

namespace mudet {

/// Base class for all errors raised by the library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Invalid configuration (bad K/N combination, negative sigma, ...).
struct ConfigError : Error {
    using Error::Error;
};

/// Caller broke an interface contract (dimension mismatch, non-bipolar bits).
struct ContractError : Error {
    using Error::Error;
};

/// Value outside the mathematical domain of an operation.
struct DomainError : Error {
    using Error::Error;
};

/// Correlation matrix too ill-conditioned to invert.
struct SingularCorrelation : Error {
    SingularCorrelation(const std::string& msg, double rcond_estimate)
        : Error(msg), rcond(rcond_estimate) {}
    double rcond;
};

/// Exhaustive enumeration refused: K above the configured cap.
struct ComplexityGuard : Error {
    using Error::Error;
};

/// A supposed unit vector handed to the change-of-basis builder is not unit.
struct BasisError : Error {
    using Error::Error;
};

}  // namespace mudet
