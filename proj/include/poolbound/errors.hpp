#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace poolbound {

// Bad numeric input: shape mismatch, non-finite entries, off-simplex vectors.
struct InvalidInputError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A request the given variant or pooling kind does not support.
struct UnsupportedError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Structural configuration problems (window not dividing n, missing params, ...).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Training diverged; carries the epoch at which the loss became non-finite.
struct TrainingError : std::runtime_error {
    TrainingError(const std::string& what, std::size_t epoch)
        : std::runtime_error(what), epoch(epoch) {}
    std::size_t epoch;
};

}  // namespace poolbound
