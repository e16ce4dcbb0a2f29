#pragma once

#include <stdexcept>
#include <string>

namespace eccg {

/// Base class of all errors thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed input file content (bad banner, bad token, truncated body).
struct FormatError : Error {
    using Error::Error;
};

/// Structurally valid file whose field/symmetry kind we do not handle.
struct UnsupportedFormatError : FormatError {
    using FormatError::FormatError;
};

/// An index in a file or argument lies outside its declared bounds.
struct BoundsError : Error {
    using Error::Error;
};

/// Shape or size mismatch between operands.
struct DimensionError : Error {
    using Error::Error;
};

/// Argument outside the operation's documented domain.
struct InvalidArgumentError : Error {
    using Error::Error;
};

/// Request exceeds a documented desk-scale budget (combinatorial or dense).
struct BudgetError : Error {
    using Error::Error;
};

/// A fault plan would exceed the encoded fault capacity k.
struct CapacityError : Error {
    using Error::Error;
};

/// The realized fault set admits no recovery (encoder submatrix singular).
struct UnrecoverableFaultError : Error {
    using Error::Error;
};

/// NaN/Inf in an aggregate or loss of positive curvature during a solve.
struct NumericalError : Error {
    using Error::Error;
};

/// Caller violated a documented precondition.
struct PreconditionError : Error {
    using Error::Error;
};

} // namespace eccg
