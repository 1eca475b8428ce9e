#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace kgfuse {

// Base of every error this library throws. Callers that only care about
// "something in kgfuse failed" catch this.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A node id was inserted twice with different node types.
class TypeConflictError : public Error {
public:
    using Error::Error;
};

// A triple endpoint (or a referenced id) does not resolve.
class IntegrityError : public Error {
public:
    using Error::Error;
};

// Lookup of an unknown node / candidate / index.
class LookupError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    explicit ParseError(const std::string& what, std::size_t line = 0)
        : Error(line == 0 ? what : what + " (line " + std::to_string(line) + ")"), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// Vector dimension mismatch, zero vectors, or inconsistent remote batches.
class DimensionError : public Error {
public:
    using Error::Error;
};

// Illegal state-machine transition or exhausted iteration budget.
class StateError : public Error {
public:
    using Error::Error;
};

class VersionConflictError : public Error {
public:
    VersionConflictError(std::uint64_t expected, std::uint64_t current)
        : Error("version conflict: request read at " + std::to_string(expected) +
                ", session is at " + std::to_string(current)),
          current_(current) {}
    std::uint64_t current() const noexcept { return current_; }

private:
    std::uint64_t current_;
};

class NetworkError : public Error {
public:
    using Error::Error;
};

// A peer answered, but not in the agreed wire format.
class ProtocolError : public Error {
public:
    using Error::Error;
};

class TrainingError : public Error {
public:
    using Error::Error;
};

// A required input file (gold standard, dataset split) does not exist.
class MissingInputError : public Error {
public:
    using Error::Error;
};

// Malformed request parameters (HTTP 400).
class InvalidRequestError : public Error {
public:
    using Error::Error;
};

}  // namespace kgfuse
