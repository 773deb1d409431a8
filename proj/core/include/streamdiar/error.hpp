#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace streamdiar {

// All library failures derive from Error so callers can catch once at the
// boundary (the CLI maps the subclasses onto exit codes).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class EmptyInputError : public Error { using Error::Error; };
class InvalidInputError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };
class ShapeError : public Error { using Error::Error; };
class RangeError : public Error { using Error::Error; };
class UnsupportedError : public Error { using Error::Error; };
class PairingError : public Error { using Error::Error; };
class BackendContractError : public Error { using Error::Error; };
class MeasurementError : public Error { using Error::Error; };

// Container / weight file problems: bad magic, version, truncation, bad JSON.
class FormatError : public Error { using Error::Error; };
// A weight file that parses but carries non-finite values.
class CorruptWeightsError : public FormatError { using FormatError::FormatError; };

// Text-format parse failure; carries the 1-based line number.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string &what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

} // namespace streamdiar
