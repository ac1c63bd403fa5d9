#pragma once

#include <stdexcept>
#include <string>

namespace fieldforge {

// Base of everything the library throws on bad input or violated contracts.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed user-supplied data: corpus lines, model files, pattern text.
class DataError : public Error {
public:
    using Error::Error;
};

class ParseError : public DataError {
public:
    ParseError(const std::string& what, std::size_t line)
        : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
    explicit ParseError(const std::string& what) : DataError(what), line_(0) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class InvariantViolation : public Error {
public:
    using Error::Error;
};

class EnumerationRefused : public Error {
public:
    using Error::Error;
};

// p~ puts mass where the model cannot (D(p~ || q) = infinity).
class AbsoluteContinuityError : public Error {
public:
    using Error::Error;
};

class ConvergenceError : public Error {
public:
    using Error::Error;
};

} // namespace fieldforge
