// error.hpp: Exception types shared by every qbrown module
//
// Two families: ConfigError for invalid inputs (bad parameters, malformed
// ranges) and NumericalError for failures that happen while computing.
// The CLI maps them to exit codes 1 and 2.

#pragma once

#include <stdexcept>
#include <string>

namespace qbrown {

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// z sits on (or within 1e-12 of) a pole of coth.
class DomainError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

// T = 0: the coth arguments diverge.
class UnsupportedTemperature : public NumericalError {
public:
    using NumericalError::NumericalError;
};

// Positivity functional has no (or more than one) zero in the scan bracket.
// what() carries the scan table.
class NoSignChange : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class StepSizeError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class SingularSystem : public NumericalError {
public:
    using NumericalError::NumericalError;
};

// omega0 = 0 has no confined equilibrium <q^2>.
class NoEquilibrium : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class UncertaintyViolation : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class GridTooSmall : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class StabilityViolation : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class NanDetected : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace qbrown
