#pragma once

#include <stdexcept>
#include <string>

namespace mrsq {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input violates a documented precondition (bad sizes, non-finite values, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A JSON document does not match the expected schema.
class SchemaError : public Error {
public:
    using Error::Error;
};

/// Binary file problems; each failure mode has its own type so callers can tell them apart.
class FormatError : public Error {
public:
    using Error::Error;
};

class BadMagicError : public FormatError {
public:
    using FormatError::FormatError;
};

class VersionMismatchError : public FormatError {
public:
    using FormatError::FormatError;
};

class TruncatedFileError : public FormatError {
public:
    using FormatError::FormatError;
};

class MissingFingerprintError : public FormatError {
public:
    using FormatError::FormatError;
};

/// The linear design matrix lost rank (two components became collinear).
class RankDeficientError : public Error {
public:
    using Error::Error;
};

/// A nonlinear fit produced a non-finite residual.
class DivergenceError : public Error {
public:
    using Error::Error;
};

/// Training loss became non-finite or blew up relative to its best value.
class TrainingDivergedError : public Error {
public:
    using Error::Error;
};

} // namespace mrsq
