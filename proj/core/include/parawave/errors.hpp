#pragma once

#include <stdexcept>
#include <string>

namespace parawave {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed call: dimension mismatch, asymmetric matrix, mismatched grids.
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// A configuration cannot be honoured (under-resolved grid, test-function
/// support outside the phase-space grid, missing input file, ...).
class ConfigurationError : public Error {
public:
    using Error::Error;
};

/// Regime or study parameters outside the range covered by a limit theorem.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Access outside a synthesized medium slab or an exhausted medium.
class RangeError : public Error {
public:
    using Error::Error;
};

/// Momentum |p| = 0 where a kernel or tensor is singular.
class DegenerateMomentumError : public Error {
public:
    using Error::Error;
};

/// File-system failure while writing results.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace parawave
