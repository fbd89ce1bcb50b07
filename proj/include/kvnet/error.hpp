#pragma once

#include <stdexcept>
#include <string>

namespace kvnet {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Argument outside the domain of a closed-form function.
class DomainError : public Error {
public:
    explicit DomainError(const std::string& msg) : Error(msg) {}
};

/// Derivative requested at a point where the profile has a kink.
class NonDifferentiableError : public Error {
public:
    explicit NonDifferentiableError(const std::string& msg) : Error(msg) {}
};

/// Limit estimator found nothing to estimate (profile vanishes near 0).
class NoSingularityError : public Error {
public:
    explicit NoSingularityError(const std::string& msg) : Error(msg) {}
};

/// Limit estimator did not settle; message carries the sequence.
class EstimationError : public Error {
public:
    explicit EstimationError(const std::string& msg) : Error(msg) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

class AssemblyError : public Error {
public:
    explicit AssemblyError(const std::string& msg) : Error(msg) {}
};

/// Dimension mismatch, near-singular shifted operator, failed factorization.
class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& msg) : Error(msg) {}
};

/// Test function whose energy integral is too small to divide by.
class DegenerateTestFunction : public Error {
public:
    explicit DegenerateTestFunction(const std::string& msg) : Error(msg) {}
};

}  // namespace kvnet
