#pragma once

#include <stdexcept>
#include <string>

namespace curvcrit {

/// Base class for all solver-specific failures.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// truncation
struct ConditionOneViolated : Error { using Error::Error; };
struct NonMonotoneBridge : Error { using Error::Error; };
struct NegativeArgument : Error { using Error::Error; };

// thresholds
struct NonConvergence : Error { using Error::Error; };
struct NoPositiveMaximum : Error { using Error::Error; };

// energy
struct DegenerateWindow : Error { using Error::Error; };

// solver
struct RadiusSearchFailed : Error { using Error::Error; };
struct LineSearchStalled : Error { using Error::Error; };
struct MaxIterations : Error { using Error::Error; };
struct EmptySet : Error { using Error::Error; };

// cli
struct ConfigError : Error { using Error::Error; };
struct LambdaOutOfRange : Error { using Error::Error; };

// io
struct IOError : Error { using Error::Error; };

} // namespace curvcrit
