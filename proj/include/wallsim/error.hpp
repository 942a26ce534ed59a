#pragma once

#include <stdexcept>
#include <string>

namespace wallsim {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the domain of a function (coincident walls, r = 0, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Time integration could not proceed (step size underflow, non-finite state).
class IntegrationError : public Error {
public:
    using Error::Error;
};

/// Iterative solver hit its iteration cap.
class NonConvergenceError : public Error {
public:
    NonConvergenceError(const std::string& what, double last_residual)
        : Error(what), last_residual_(last_residual) {}

    double last_residual() const noexcept { return last_residual_; }

private:
    double last_residual_;
};

/// Explicit PDE step produced negative density.
class InstabilityError : public Error {
public:
    using Error::Error;
};

}  // namespace wallsim
