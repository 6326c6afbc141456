#pragma once

#include <stdexcept>
#include <string>

namespace quanteit {

// Bad arguments, malformed files, inconsistent shapes. CLI exit code 1.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Failures of the numerics themselves: singular systems, non-finite
// gradients, diverged solves. CLI exit code 2.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace quanteit
