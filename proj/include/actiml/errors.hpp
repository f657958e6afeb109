#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace actiml {

// Base class for all toolkit errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Filesystem-level failures: missing files, unreadable or unwritable paths.
// The CLI maps these to exit code 2.
class IoError : public Error {
public:
    using Error::Error;
};

// Malformed input text. Carries the 1-based line number when known.
// The CLI maps these to exit code 1.
class ParseError : public Error {
public:
    explicit ParseError(const std::string& what, std::size_t line = 0)
        : Error(line > 0 ? what + " (line " + std::to_string(line) + ")" : what),
          line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// Contract violations on otherwise well-formed data (negative activity,
// mismatched lengths, duplicate participant ids). CLI exit code 1.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Raised when a dataset yields no feature rows at all. Subclass so the CLI
// can downgrade it to a warning for `featurize`.
class EmptyMatrixError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// Mathematical domain violations (log of a negative, Gini of an empty node).
// CLI exit code 1.
class DomainError : public Error {
public:
    using Error::Error;
};

} // namespace actiml
