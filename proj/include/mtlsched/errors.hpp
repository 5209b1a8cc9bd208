#pragma once

#include <stdexcept>

namespace mtlsched {

// Vector/matrix shapes do not line up.
struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Out-of-range or otherwise invalid argument values.
struct ArgumentError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// NaN/Inf encountered where a finite value is required.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input text (CSV rows, checkpoint descriptors).
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid experiment configuration; the message names the offending key.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace mtlsched
