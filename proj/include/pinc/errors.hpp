#pragma once

#include <stdexcept>
#include <string>

namespace pinc {

/// Bad user input: malformed config files, missing keys, inconsistent shapes.
/// CLI exit code 1.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure: non-finite states, losses, or gradients.
/// CLI exit code 2.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace pinc
