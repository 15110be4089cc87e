#pragma once

#include <stdexcept>
#include <string>

namespace jflow {

// Error taxonomy: one type per violated contract, so callers can react
// to the failure mode rather than parse message strings.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A field carries NaN/Inf values.
struct InvalidFieldError : Error { using Error::Error; };

// Two fields live on different grids.
struct GridMismatchError : Error { using Error::Error; };

// A cohomology class with nonpositive self-intersection where positivity is required.
struct DegenerateClassError : Error { using Error::Error; };

// A metric argument is not positive definite at some node.
struct SingularMetricError : Error { using Error::Error; };

// chi + dd^c(phi) is not positive: the potential left the admissible cone.
struct NotInConeError : Error { using Error::Error; };

// Time step underflowed while trying to keep the state positive.
struct StiffnessError : Error { using Error::Error; };

// The Newton line search cannot keep the background positive; solve with
// a regularized family instead.
struct ContinuationNeededError : Error { using Error::Error; };

struct NoConvergenceError : Error { using Error::Error; };

// Background forms not normalized the way the caller requires (c != 1).
struct NormalizationError : Error { using Error::Error; };

struct ConfigError : Error { using Error::Error; };

struct IoError : Error { using Error::Error; };

} // namespace jflow
