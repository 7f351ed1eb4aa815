#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qcstab {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shapes of operands do not agree (grid, m, n, k).
class DimensionError : public Error {
public:
    using Error::Error;
};

/// An input violates a documented precondition.
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// A request that has no admissible answer, e.g. k > bound in index enumeration.
class EmptyInputError : public PreconditionError {
public:
    using PreconditionError::PreconditionError;
};

/// Scalar field contains invalid nodes inside the integration region.
class InvalidNodesError : public PreconditionError {
public:
    InvalidNodesError(const std::string& what, std::size_t count, double measure = 0.0)
        : PreconditionError(what), count_(count), measure_(measure) {}

    std::size_t count() const noexcept { return count_; }
    double measure() const noexcept { return measure_; }

private:
    std::size_t count_;
    double measure_;
};

/// The (F, G) pair has no usable samples, e.g. G never positive on the sphere.
class DegenerateInstanceError : public Error {
public:
    using Error::Error;
};

/// The constraint set of a constrained probe is empty at the given resolution.
class InfeasibleError : public Error {
public:
    using Error::Error;
};

/// No projector onto the solution class is registered for the instance.
class UnsupportedInstanceError : public Error {
public:
    using Error::Error;
};

/// Least-squares fit has rank-deficient design.
class DegenerateFitError : public Error {
public:
    using Error::Error;
};

/// A sequence failed its convergence precondition. Carries the measured gap.
class ConvergenceError : public PreconditionError {
public:
    ConvergenceError(const std::string& what, double measured)
        : PreconditionError(what), measured_(measured) {}

    double measured() const noexcept { return measured_; }

private:
    double measured_;
};

/// Parse or schema failure of an input file.
class FormatError : public Error {
public:
    using Error::Error;
};

}  // namespace qcstab
