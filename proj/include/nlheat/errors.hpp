#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace nlheat {

/// Base class of every error thrown by the library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Invalid user input: node counts, step sizes, tolerances, config keys.
struct ConfigError : Error {
    using Error::Error;
};

struct DimensionError : Error {
    using Error::Error;
};

/// Argument outside the domain of a function (e.g. the 2D profile at t <= 0).
struct DomainError : Error {
    using Error::Error;
};

/// A precondition on matrix structure was violated (e.g. non-symmetric input).
struct ContractError : Error {
    using Error::Error;
};

struct SingularMatrixError : Error {
    using Error::Error;
};

/// Explicit reference integration left its stability region.
struct StabilityError : Error {
    using Error::Error;
};

/// Undefined relative error (the reference vector vanishes).
struct MetricError : Error {
    using Error::Error;
};

/// An iterative process stopped before reaching its tolerance. Carries the
/// best iterate available and the last error/residual measure.
struct ConvergenceError : Error {
    ConvergenceError(const std::string& what, Eigen::VectorXd best, double err)
        : Error(what), best_iterate(std::move(best)), error_measure(err) {}

    Eigen::VectorXd best_iterate;
    double error_measure;
};

} // namespace nlheat
