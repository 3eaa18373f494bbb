#pragma once

#include <stdexcept>
#include <string>

namespace snapkit {

/// Base class of all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input or a violated data-model invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// An operation was called on input that does not satisfy its precondition
/// (deformed or shaky start realization, wrong strain model, ...).
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// A numerical procedure could not produce a trustworthy result.
class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace snapkit
