#pragma once

#include <stdexcept>
#include <string>

namespace sslbench {

// Error taxonomy shared by the whole library. The CLI maps these to the
// documented exit codes: config -> 2, data -> 3, numeric -> 4.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Caller violated an API contract (non-scalar backward seed, missing
// gradients, predicting with an empty model, ...).
class UsageError : public std::runtime_error {
public:
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

class ShapeError : public UsageError {
public:
    explicit ShapeError(const std::string& msg) : UsageError(msg) {}
};

}  // namespace sslbench
