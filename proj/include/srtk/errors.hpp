#pragma once

#include <stdexcept>
#include <string>

namespace srtk {

// Missing or unusable external configuration (weight files, config keys).
// Distinct from std::invalid_argument, which covers bad call arguments.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Raised when a training run produces a non-finite loss.
class TrainingDiverged : public std::runtime_error {
public:
    explicit TrainingDiverged(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace srtk
