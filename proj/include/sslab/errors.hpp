#pragma once

#include <stdexcept>
#include <string>

namespace sslab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Model or engine parameters violate their invariants.
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Conjugate update with zero predictive variance and an observation that
/// disagrees with the predicted mean.
class DegenerateUpdateError : public Error {
public:
    using Error::Error;
};

/// Every particle has zero likelihood for the observation.
class TotalDegeneracyError : public Error {
public:
    using Error::Error;
};

/// API misuse such as mismatched lengths.
class UsageError : public Error {
public:
    using Error::Error;
};

/// An injected predictor produced a non-finite value.
class PredictorError : public Error {
public:
    using Error::Error;
};

/// Malformed input file or configuration document.
class ParseError : public Error {
public:
    using Error::Error;
};

}  // namespace sslab
