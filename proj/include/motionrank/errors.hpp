#pragma once

#include <stdexcept>
#include <string>

namespace motionrank {

// Tensor/layer shape disagreements.
struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Window of length 1: alpha_1 = 0, frame recovery is undefined.
struct DegenerateWindowError : std::runtime_error {
    explicit DegenerateWindowError(const std::string& msg) : std::runtime_error(msg) {}
};

// Frame directory has a hole in its numbering.
struct MissingFrameError : std::runtime_error {
    explicit MissingFrameError(const std::string& msg) : std::runtime_error(msg) {}
};

// Unreadable or malformed image / checkpoint / DIMG payload.
struct DecodeError : std::runtime_error {
    explicit DecodeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values where finite ones are required.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace motionrank
