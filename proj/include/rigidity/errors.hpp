#pragma once

#include <stdexcept>
#include <string>

namespace rigidity {

/// Base class for failures of the numerical machinery (as opposed to bad
/// user input, which is ConfigError). CLI maps these to exit code 3.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Bad or inconsistent experiment configuration. CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NotExpandingError : NumericalError {
    using NumericalError::NumericalError;
};

struct BudgetExceededError : NumericalError {
    using NumericalError::NumericalError;
};

/// A root solve was handed an interval without a sign change.
struct RootBracketError : NumericalError {
    using NumericalError::NumericalError;
};

struct NoConvergenceError : NumericalError {
    using NumericalError::NumericalError;
};

struct DensityVanishesError : NumericalError {
    using NumericalError::NumericalError;
};

struct EndpointMismatchError : NumericalError {
    using NumericalError::NumericalError;
};

struct NotHyperbolicError : NumericalError {
    using NumericalError::NumericalError;
};

struct NotSimpleSpectrumError : NumericalError {
    using NumericalError::NumericalError;
};

struct ConeViolationError : NumericalError {
    using NumericalError::NumericalError;
};

struct NewtonDivergedError : NumericalError {
    using NumericalError::NumericalError;
};

/// Two distinct periodic seeds collapsed onto one orbit of the perturbed map.
struct DuplicateOrbitError : NumericalError {
    using NumericalError::NumericalError;
};

/// Stable/unstable signature of a continued orbit disagrees with the linear model.
struct SignatureMismatchError : NumericalError {
    using NumericalError::NumericalError;
};

struct ResolutionExhaustedError : NumericalError {
    using NumericalError::NumericalError;
};

struct InversionFailureError : NumericalError {
    using NumericalError::NumericalError;
};

} // namespace rigidity
