#pragma once

#include <stdexcept>
#include <string>

namespace fib {

struct DimensionMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct NonFinite : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct NegativeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// FIB is undefined for a single feature (nothing to balance).
struct DegenerateDimension : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct TooFewFeatures : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct BadAssignment : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct VerificationFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MissingColumn : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct TooFewRows : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct BadSpec : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DivergenceDetected : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DegenerateLabels : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct SingularSystem : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace fib
