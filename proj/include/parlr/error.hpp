#pragma once

#include <stdexcept>
#include <string>

namespace parlr {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shape mismatch, out-of-range parameter or otherwise malformed argument.
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// A non-finite value appeared while time stepping.
class NumericalBlowup : public Error {
public:
    NumericalBlowup(const std::string& what, long step, int stage)
        : Error(what + " (step " + std::to_string(step) + ", stage " + std::to_string(stage) + ")"),
          step_(step),
          stage_(stage) {}

    long step() const noexcept { return step_; }
    int stage() const noexcept { return stage_; }

private:
    long step_;
    int stage_;
};

}  // namespace parlr
