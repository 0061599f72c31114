#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mixco {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration value or combination (bad sizes, τ ≤ 0, odd B, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Operand shapes do not agree.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Non-finite input or probe value where finiteness is required.
class DomainError : public Error {
public:
    using Error::Error;
};

/// A documented precondition on argument values was violated.
class ContractError : public Error {
public:
    using Error::Error;
};

/// Training produced a non-finite loss or gradient.
class DivergenceError : public Error {
public:
    using Error::Error;
};

/// Malformed or truncated file. Carries the byte offset where parsing failed.
class FormatError : public Error {
public:
    FormatError(const std::string& what, std::size_t offset)
        : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}

    [[nodiscard]] std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// Filesystem failure (cannot open, cannot write).
class FileError : public Error {
public:
    using Error::Error;
};

}  // namespace mixco
