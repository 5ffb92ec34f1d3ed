#pragma once

#include <stdexcept>
#include <string>

namespace mortenv {

// Bad inputs: malformed files, schema violations, contract preconditions.
// Maps to CLI exit code 1.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Numerical failure: diverging solver, NaN loss, singular system.
// Maps to CLI exit code 2.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace mortenv
