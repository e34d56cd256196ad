#pragma once

#include <stdexcept>
#include <string>

namespace mtga {

// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed file: bad magic, bad version, truncated payload, unparsable text.
struct FormatError : Error {
    using Error::Error;
};

// Well-formed file whose contents violate a domain invariant.
struct ValidationError : Error {
    using Error::Error;
};

// Invalid argument to an operation (out-of-range index, empty axis, ...).
struct ArgumentError : Error {
    using Error::Error;
};

// Invalid generator / builder parameters.
struct ParameterError : Error {
    using Error::Error;
};

// Tensor shape mismatch; message names both shapes.
struct DimensionError : Error {
    using Error::Error;
};

// Dangling edge index or otherwise inconsistent graph structure.
struct GraphError : Error {
    using Error::Error;
};

// Temporal lengths of two views disagree.
struct AlignmentError : Error {
    using Error::Error;
};

// Model configuration inconsistent with itself or with its inputs.
struct ConfigError : Error {
    using Error::Error;
};

// Filesystem-level failure.
struct IoError : Error {
    using Error::Error;
};

}  // namespace mtga
