#pragma once

#include <stdexcept>
#include <string>

namespace morphkit {

// Every failure raised by the library derives from Error so callers can
// catch the whole family at a tool boundary.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class BoundsError : public Error { using Error::Error; };
class ArgumentError : public Error { using Error::Error; };
class IoError : public Error { using Error::Error; };
class ValidationError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };
class PlacementError : public Error { using Error::Error; };
class PlanningError : public Error { using Error::Error; };
class TrainingError : public Error { using Error::Error; };
class EvaluationError : public Error { using Error::Error; };
class NumericError : public Error { using Error::Error; };
class CalibrationError : public Error { using Error::Error; };

// Malformed input record; carries the offending file and 1-based line.
class ParseError : public Error {
public:
    ParseError(const std::string& file, std::size_t line, const std::string& what)
        : Error(file + ":" + std::to_string(line) + ": " + what), file_(file), line_(line) {}

    const std::string& file() const noexcept { return file_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::string file_;
    std::size_t line_;
};

}  // namespace morphkit
