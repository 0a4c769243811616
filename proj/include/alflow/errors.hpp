#pragma once

#include <stdexcept>

namespace alflow {

// Runtime numerical failure: iteration caps hit, step-size underflow,
// data that left the supported regime mid-computation.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The spectrum has a vanishing Uhlenbeck constant, i.e. Q shares a root
// with A. Formula-level quantities still exist, but curve construction
// and everything downstream of it is rejected.
struct DegenerateSpectrumError : NumericalError {
    using NumericalError::NumericalError;
};

// Invalid run configuration (CLI flags or config file).
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

} // namespace alflow
