#pragma once

#include <stdexcept>
#include <string>

namespace wsq {

// Bad user-facing input: configs, CLI arguments, out-of-range parameters.
// The CLI maps this family to exit code 1.
struct validation_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct invalid_level_error : validation_error {
    explicit invalid_level_error(int j)
        : validation_error("level index must be >= 1, got " + std::to_string(j)) {}
};

struct invalid_carrier_error : validation_error {
    explicit invalid_carrier_error(int j)
        : validation_error("carrier index must be >= 2, got " + std::to_string(j)) {}
};

struct invalid_target_error : validation_error {
    using validation_error::validation_error;
};

struct symmetry_violation_error : validation_error {
    using validation_error::validation_error;
};

struct invalid_mode_error : validation_error {
    using validation_error::validation_error;
};

struct normalization_error : validation_error {
    using validation_error::validation_error;
};

// Numerical failures during a run.  The CLI maps these to exit code 2.
struct numerical_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct evaluation_error : numerical_error {
    using numerical_error::numerical_error;
};

struct truncation_failure_error : numerical_error {
    using numerical_error::numerical_error;
};

// Step-size underflow in the adaptive integrator; carries the time at which
// the controller gave up.
struct integration_failure_error : numerical_error {
    double failure_time;
    integration_failure_error(const std::string& what, double t)
        : numerical_error(what + " at t = " + std::to_string(t)), failure_time(t) {}
};

} // namespace wsq
