#pragma once

#include <stdexcept>
#include <string>

namespace flowproc {

// Base for every failure the toolkit raises on its own behalf. The CLI maps
// FlowError (configuration / numerical aborts) to exit status 1 and
// CheckFailure (a built-in statistical check did not pass) to exit status 2.
struct FlowError : std::runtime_error {
    explicit FlowError(const std::string& msg) : std::runtime_error(msg) {}
};

#define FLOWPROC_ERROR(Name)                                               \
    struct Name : FlowError {                                              \
        explicit Name(const std::string& m) : FlowError(#Name ": " + m) {} \
    }

FLOWPROC_ERROR(EllipticityViolation);
FLOWPROC_ERROR(BoundViolation);
FLOWPROC_ERROR(NonpositiveTime);
FLOWPROC_ERROR(UnsupportedCoefficients);
FLOWPROC_ERROR(GridTooCoarse);
FLOWPROC_ERROR(InvalidStep);
FLOWPROC_ERROR(OutOfRange);
FLOWPROC_ERROR(StepTooLarge);
FLOWPROC_ERROR(PopulationExplosion);
FLOWPROC_ERROR(InsufficientEnvironmentPath);
FLOWPROC_ERROR(SupportOutsideGrid);
FLOWPROC_ERROR(StabilityViolation);
FLOWPROC_ERROR(NonfiniteValue);
FLOWPROC_ERROR(BoundaryLeak);
FLOWPROC_ERROR(NegativeTerminalData);
FLOWPROC_ERROR(ArityTooLarge);
FLOWPROC_ERROR(InsufficientData);
FLOWPROC_ERROR(ConfigError);
FLOWPROC_ERROR(IoError);
FLOWPROC_ERROR(CheckFailure);

#undef FLOWPROC_ERROR

}  // namespace flowproc
