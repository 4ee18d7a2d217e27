#pragma once

#include <stdexcept>
#include <string>

namespace causalbandit {

// Base of every error thrown by the library. The CLI maps subclasses onto
// exit codes: ConfigError -> 2, NumericalError family -> 3.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class ParameterError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class DataError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

// (I - A) could not be inverted.
class SingularSystemError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

// A played decision scored above the optimum by more than the tolerance.
class ConsistencyError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class DegenerateInstanceError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class UnsupportedStructureError : public Error {
public:
    using Error::Error;
};

class SizeError : public Error {
public:
    using Error::Error;
};

class UnobservedArmError : public Error {
public:
    using Error::Error;
};

}  // namespace causalbandit
