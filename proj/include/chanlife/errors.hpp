#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace chanlife {

using Satoshi = std::int64_t;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Out-of-domain argument (p outside (0,1), negative funds, ...).
class ParameterError : public Error {
public:
    using Error::Error;
};

/// A channel that cannot carry a single payment in one of its directions.
class DegenerateChannelError : public Error {
public:
    using Error::Error;
};

/// A channel with zero payment rate in both directions.
class DeadChannelError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

/// A checked model property did not hold (e.g. symmetric rates gave p != 1/2).
class InvariantViolation : public Error {
public:
    using Error::Error;
};

class NoUnbalanceError : public Error {
public:
    using Error::Error;
};

/// Malformed input file. `line()` is 1-based, 0 when not tied to a line.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace chanlife
