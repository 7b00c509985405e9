#pragma once

#include <stdexcept>
#include <string>

namespace cxr {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller-supplied parameter is outside its documented domain.
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// Raster or matrix shapes disagree.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Bytes on disk do not match the expected file layout.
class FormatError : public Error {
public:
    using Error::Error;
};

/// A model file holds a different model type than the one requested.
class TypeError : public FormatError {
public:
    using FormatError::FormatError;
};

/// The data violates a pipeline contract (empty class, bad directory, ...).
class DataError : public Error {
public:
    using Error::Error;
};

/// Numerical failure during training (non-finite loss, singular system).
class NumericalError : public Error {
public:
    using Error::Error;
};

/// The command line or a config file is malformed. The CLI maps this to exit
/// code 1; every other Error maps to 2.
class UsageError : public Error {
public:
    using Error::Error;
};

class ConfigError : public UsageError {
public:
    using UsageError::UsageError;
};

}  // namespace cxr
