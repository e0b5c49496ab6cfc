#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace spider {

struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct invalid_parameter : error {
    using error::error;
};

// z = 0 handed to an operation with a pole there.
struct pole_error : error {
    using error::error;
};

// Requested the preimage of the omitted value.
struct no_preimage_error : error {
    using error::error;
};

// An iterative solve ran out of iterations; carries the last iterate.
struct nonconvergence_error : error {
    nonconvergence_error(const std::string& what, std::complex<double> last)
        : error(what), last_iterate(last) {}
    std::complex<double> last_iterate;
};

// Run-config document problems: syntax (with location) or a violated
// portrait invariant (by name).
struct config_error : error {
    using error::error;
};

struct validation_error : error {
    validation_error(const std::string& invariant, const std::string& detail)
        : error(invariant + ": " + detail), invariant(invariant) {}
    std::string invariant;
};

struct configuration_error : error {
    using error::error;
};

struct postcondition_error : error {
    using error::error;
};

struct seed_rejected_error : error {
    using error::error;
};

struct branch_tracking_error : error {
    using error::error;
};

struct quadrature_error : error {
    using error::error;
};

struct bounded_geometry_error : error {
    using error::error;
};

// Newton in the parameter plane converged onto a root that violates the
// requested orbit portrait.
struct wrong_basin_error : error {
    wrong_basin_error(const std::string& what, std::complex<double> lambda)
        : error(what), lambda(lambda) {}
    std::complex<double> lambda;
};

}  // namespace spider
