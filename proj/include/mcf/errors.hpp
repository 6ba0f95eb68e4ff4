#pragma once

#include <stdexcept>
#include <string>

namespace mcf {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A finite-difference stencil reached a node flagged outside the domain.
class StencilError : public Error {
public:
    StencilError(const std::string& what, int i, int j) : Error(what), i_(i), j_(j) {}
    int i() const { return i_; }
    int j() const { return j_; }

private:
    int i_;
    int j_;
};

/// Unsupported or inconsistent geometric description.
class SpecificationError : public Error {
public:
    using Error::Error;
};

/// The grid cannot resolve the requested domain.
class ResolutionError : public Error {
public:
    using Error::Error;
};

/// A scalar parameter is out of its admissible range.
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Numerical failure inside an integrator or solver.
class NumericError : public Error {
public:
    using Error::Error;
};

/// A precondition on the input data was violated (regularity, grid mismatch, ...).
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// A derived output would be empty (no reached region, no contour, ...).
class DegenerateOutputError : public Error {
public:
    using Error::Error;
};

/// Configuration file could not be parsed or validated.
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace mcf
