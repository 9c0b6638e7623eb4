#pragma once

#include <stdexcept>
#include <string>

namespace specpc {

// Invalid input data or parameters (bad values, shapes, ranges).
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A numerical routine failed (non-convergence, broken symmetry).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace specpc
