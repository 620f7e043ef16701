#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ccgrav {

/// Base class for all errors thrown by the library.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed inputs: bad grid specs, mismatched grids, invalid parameters.
struct validation_error : error {
    using error::error;
};

/// Index-variance mismatch (covariant where contravariant expected, etc.).
struct variance_error : validation_error {
    using validation_error::validation_error;
};

/// Numerical failure: non-finite data, loss of positivity, breakdown.
/// Messages name the offending grid point where one exists.
struct numeric_error : error {
    using error::error;
};

/// Iterative solver failed to converge; carries the residual history.
struct solve_error : numeric_error {
    solve_error(const std::string& what, std::vector<double> history)
        : numeric_error(what), residual_history(std::move(history)) {}
    std::vector<double> residual_history;
};

}  // namespace ccgrav
