#pragma once

#include <stdexcept>
#include <string>

namespace ermakov {

// Root of every error thrown by the library. The subclasses map onto the
// failure classes callers branch on (configuration vs numerical failure).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad parameters, grids or drive descriptions supplied by the caller.
class ConfigurationError : public Error {
public:
    using Error::Error;
};

/// Argument outside the mathematical domain of an operation (e.g. alpha <= 0).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Non-finite or otherwise inadmissible dynamical state.
class InvalidStateError : public Error {
public:
    using Error::Error;
};

/// Arrays living on different grids were combined.
class ShapeError : public Error {
public:
    using Error::Error;
};

// Failures that happen while integrating; the CLI maps these to exit code 2.
class NumericalError : public Error {
public:
    using Error::Error;
};

class WidthCollapseError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class DegenerateStateError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class InsufficientSupportError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class DivergenceError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Integration stopped early. Carries everything computed up to the last
/// valid record.
template <class Partial>
class AbortedError : public NumericalError {
public:
    AbortedError(const std::string& what, Partial partial)
        : NumericalError(what), partial_(std::move(partial)) {}

    const Partial& partial() const noexcept { return partial_; }

private:
    Partial partial_;
};

} // namespace ermakov
