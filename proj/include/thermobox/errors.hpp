#pragma once

#include <stdexcept>
#include <string>

namespace thermobox {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid argument: non-positive beta, malformed table, bad window, ...
class DomainError : public Error {
public:
    using Error::Error;
};

/// Evaluation at a point where the quantity is singular (e.g. g/Δf at ε0).
class SingularityError : public DomainError {
public:
    using DomainError::DomainError;
};

/// Iterative method ran out of budget. Carries the best error estimate.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double estimate)
        : Error(what), estimate_(estimate) {}
    double estimate() const noexcept { return estimate_; }

private:
    double estimate_;
};

/// Requested currents lie outside the attainable region.
class FeasibilityError : public Error {
public:
    using Error::Error;
};

/// Root bracketing failed after a sign change was detected.
class SolverError : public Error {
public:
    using Error::Error;
};

/// Boxcar endpoint is (nearly) a double root: the implicit-function
/// derivatives do not exist there.
class NearBifurcationError : public Error {
public:
    using Error::Error;
};

/// Problem is too large for exhaustive enumeration.
class SizeError : public Error {
public:
    using Error::Error;
};

}  // namespace thermobox
