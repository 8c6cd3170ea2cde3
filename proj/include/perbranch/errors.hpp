#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace perbranch {

/// Base class for all numerical failures reported by the library.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A point lies outside the ambient box, or a translation operator was
/// evaluated outside its (open) domain.
struct DomainError : NumericError {
    using NumericError::NumericError;
};

/// The constraint Jacobian block that must be inverted failed its
/// invertibility check.
struct ReductionError : NumericError {
    ReductionError(const std::string& msg, double sigma_min)
        : NumericError(msg), smallest_singular_value(sigma_min) {}
    double smallest_singular_value;
};

/// Newton projection onto the constraint set did not converge.
struct ProjectionError : NumericError {
    ProjectionError(const std::string& msg, double residual)
        : NumericError(msg), last_residual(residual) {}
    double last_residual;
};

/// Adaptive step size underflowed.
struct StiffnessError : NumericError {
    using NumericError::NumericError;
};

/// A degree or index computation found (suspected) zeros on the boundary.
struct AdmissibilityError : NumericError {
    AdmissibilityError(const std::string& msg, double boundary_min)
        : NumericError(msg), boundary_min_norm(boundary_min) {}
    double boundary_min_norm;
};

/// Newton iteration stagnated; carries the residual history.
struct ConvergenceError : NumericError {
    ConvergenceError(const std::string& msg, std::vector<double> history)
        : NumericError(msg), residual_history(std::move(history)) {}
    std::vector<double> residual_history;
};

}  // namespace perbranch
