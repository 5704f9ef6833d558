#pragma once

#include <stdexcept>
#include <string>

namespace resform {

/// Base class for all library failures.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input: the message names the offending item.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Exponent selection impossible for the fitted envelope parameters.
class InfeasibleError : public Error {
public:
    using Error::Error;
};

/// An empirical precondition of a theorem check failed.
class HypothesesError : public Error {
public:
    using Error::Error;
};

/// The usable radius/time window is too small to run the requested analysis.
class WindowError : public Error {
public:
    using Error::Error;
};

} // namespace resform
