#pragma once

#include <stdexcept>
#include <string>

namespace ppm {

// Input data failed a contract (bad score, duplicate id, malformed row, ...).
// The CLI maps this family to exit code 2.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad configuration or usage (shape mismatch, missing file, invalid knob).
// Exit code 3.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure (non-finite value, undefined correlation). Exit code 4.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace ppm
