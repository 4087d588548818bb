#pragma once

#include <stdexcept>
#include <string>

namespace n2n {

// All library failures are reported through one of these. The CLI maps any
// Error to a one-line diagnostic and a nonzero exit code.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed or unsupported file contents (WAV headers, model files, manifests).
class FormatError : public Error {
public:
    using Error::Error;
};

// Signal or frame dimensions that cannot be processed (too short, not a
// power of two, mismatched lengths).
class SizeError : public Error {
public:
    using Error::Error;
};

// Tensor or layer dimensions that do not line up.
class ShapeError : public Error {
public:
    using Error::Error;
};

// Invalid configuration values or unknown config keys.
class ConfigError : public Error {
public:
    using Error::Error;
};

// All-zero or silent input where a live signal is required.
class DegenerateSignalError : public Error {
public:
    using Error::Error;
};

// Paired inputs that should correspond sample-for-sample but do not.
class AlignmentError : public Error {
public:
    using Error::Error;
};

// NaN or Inf observed during a training step; the step is abandoned and the
// model/optimizer state is left as it was before the step.
class NumericFault : public Error {
public:
    using Error::Error;
};

// A required estimate (noise PSD, noise floor) has no data behind it.
class MissingEstimateError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace n2n
