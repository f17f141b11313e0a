#pragma once

#include <stdexcept>
#include <string>

namespace rombo {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input violates a documented precondition (bad mesh, negative ratio, ...).
class InvalidSpec : public Error {
public:
    using Error::Error;
};

/// A matrix that must be invertible is (numerically) singular.
class SingularMatrix : public Error {
public:
    using Error::Error;
};

/// Reduction is numerically ill-conditioned (e.g. too many modes for B).
class IllConditioned : public Error {
public:
    using Error::Error;
};

/// Contact kinematics cannot be transformed to gap coordinates.
class InvalidKinematics : public Error {
public:
    using Error::Error;
};

/// Model is structurally unsuitable for the requested operation.
class ModelError : public Error {
public:
    using Error::Error;
};

/// Iterative solver did not converge; carries the last residual.
class NonConvergence : public Error {
public:
    NonConvergence(const std::string& what, double residual, int iterations)
        : Error(what), residual_(residual), iterations_(iterations) {}
    double residual() const noexcept { return residual_; }
    int iterations() const noexcept { return iterations_; }

private:
    double residual_;
    int iterations_;
};

/// Time integration blew up (non-finite or runaway state).
class Divergence : public Error {
public:
    Divergence(const std::string& what, long step, double time)
        : Error(what), step_(step), time_(time) {}
    long step() const noexcept { return step_; }
    double time() const noexcept { return time_; }

private:
    long step_;
    double time_;
};

}  // namespace rombo
