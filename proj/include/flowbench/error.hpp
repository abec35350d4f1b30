#pragma once

#include <stdexcept>
#include <string>

namespace flowbench {

// Base for everything this library throws on purpose.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Tensor/layer shape disagreement.
struct DimensionError : Error {
    using Error::Error;
};

// Argument outside its documented domain (t outside [0,1], m > N, ...).
struct RangeError : Error {
    using Error::Error;
};

// API misuse: stale cache, missing observation frames, empty demo set.
struct ContractError : Error {
    using Error::Error;
};

// NaN/Inf encountered where only finite values are valid.
struct NumericError : Error {
    using Error::Error;
};

// File format problems: bad magic, version mismatch, truncated payload.
struct IoError : Error {
    using Error::Error;
};

// Run configuration failed validation (unknown key, bad value).
struct ConfigError : Error {
    using Error::Error;
};

}  // namespace flowbench
