#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace laoram {

/// Base of every error raised by the library. The kind-specific subclasses
/// let callers (and tests) distinguish misuse from corrupted state.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An identifier (block, leaf, level) outside its valid range.
class RangeError : public Error {
public:
    using Error::Error;
};

/// A structural invariant would be (or was) violated. Never recoverable.
class InvariantError : public Error {
public:
    using Error::Error;
};

/// Operation issued against an object in the wrong lifecycle state.
class StateError : public Error {
public:
    using Error::Error;
};

/// Geometry cannot hold the requested data.
class CapacityError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration or parameter combination.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Statistical or arithmetic precondition not met (too few samples, ...).
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// The eviction drain loop hit its iteration guard.
class EvictionGuardError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(std::uint64_t line, const std::string &what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::uint64_t line() const noexcept { return line_; }

private:
    std::uint64_t line_;
};

/// Like ParseError but the line parsed fine and held an out-of-range index.
class TraceRangeError : public RangeError {
public:
    TraceRangeError(std::uint64_t line, const std::string &what)
        : RangeError("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::uint64_t line() const noexcept { return line_; }

private:
    std::uint64_t line_;
};

} // namespace laoram
