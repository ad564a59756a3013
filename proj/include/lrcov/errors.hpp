#pragma once

#include <stdexcept>
#include <string>

namespace lrcov {

/// Raised when a configuration or an operation precondition is violated.
class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

/// Raised when a factorization, eigensolve or iteration fails numerically.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace lrcov
