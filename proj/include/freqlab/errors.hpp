#pragma once

#include <stdexcept>
#include <string>

namespace freqlab {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Argument outside an operation's domain (s <= 0 for phi, x = 0 for mu, ...).
struct DomainError : Error {
    using Error::Error;
};

struct UnsupportedError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

// Random field generation produced values outside the admissible range.
struct GenerationError : Error {
    using Error::Error;
};

struct SolverError : Error {
    SolverError(const std::string& what, double residual, int iterations)
        : Error(what), residual(residual), iterations(iterations) {}
    double residual;
    int iterations;
};

// The weighted boundary mass vanished at `radius`; frequency quantities are undefined there.
struct VanishingBoundary : Error {
    VanishingBoundary(const std::string& what, double radius) : Error(what), radius(radius) {}
    double radius;
};

}  // namespace freqlab
