#pragma once

#include <stdexcept>
#include <string>

namespace mmdhd {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller-side contract was violated (bad size, non-positive scale, ...).
class PreconditionError : public Error {
public:
    using Error::Error;
};

class MomentUndefined : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public PreconditionError {
public:
    using PreconditionError::PreconditionError;
};

class DegenerateData : public Error {
public:
    using Error::Error;
};

class MissingData : public PreconditionError {
public:
    using PreconditionError::PreconditionError;
};

class TooFewPairs : public PreconditionError {
public:
    using PreconditionError::PreconditionError;
};

class DegenerateVariance : public Error {
public:
    using Error::Error;
};

class DomainError : public PreconditionError {
public:
    using PreconditionError::PreconditionError;
};

class QuadratureNonConvergence : public Error {
public:
    using Error::Error;
};

class ConfigInvalid : public Error {
public:
    using Error::Error;
};

class NonPositiveValue : public PreconditionError {
public:
    using PreconditionError::PreconditionError;
};

/// Malformed input file; carries the 1-based line number.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class RaggedRows : public ParseError {
public:
    using ParseError::ParseError;
};

}  // namespace mmdhd
