#pragma once

#include <stdexcept>
#include <string>

namespace divband {

// Root of the library's exception hierarchy. Everything thrown on purpose
// derives from this, so callers can catch divband::Error at the API boundary.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// ---- numerics --------------------------------------------------------------

// Root finder was given an interval whose endpoints do not straddle zero.
class NoBracketError : public Error {
public:
    using Error::Error;
};

// A user-supplied callable returned NaN/Inf where a finite value is required.
class NonFiniteError : public Error {
public:
    using Error::Error;
};

// Adaptive quadrature hit its subdivision cap before reaching tolerance.
class MaxSubdivisionsError : public Error {
public:
    using Error::Error;
};

// ---- model / auxiliary functions -------------------------------------------

// Argument outside the mathematical domain of the requested map
// (e.g. inverting an increasing function below its value at zero).
class NegativeArgumentError : public Error {
public:
    using Error::Error;
};

// Evaluation outside the interval where the function is defined.
class DomainError : public Error {
public:
    using Error::Error;
};

// Operation that only makes sense in one of the two structural cases
// was invoked in the other one.
class WrongCaseError : public Error {
public:
    using Error::Error;
};

// ---- solver ----------------------------------------------------------------

// The closed-form tail above the free boundary failed its defining
// quadratic identity; indicates inconsistent constants upstream.
class TailNotQuadraticError : public Error {
public:
    using Error::Error;
};

// Band search could not produce 0 < c* < k with xtil < xhat.
class DegenerateBandError : public Error {
public:
    using Error::Error;
};

// Value/policy evaluation requested at x < 0.
class NegativeSurplusError : public Error {
public:
    using Error::Error;
};

// ---- simulator -------------------------------------------------------------

// A dividend rule asked to pay out more than the current surplus.
class NonAdmissibleError : public Error {
public:
    using Error::Error;
};

// ---- config / io -----------------------------------------------------------

// Malformed or inconsistent run configuration (unknown keys, bad types,
// out-of-range parameter values).
class ConfigError : public Error {
public:
    using Error::Error;
};

// Filesystem failure while reading input or atomically writing output.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace divband
