#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "spider/complex_ops.hpp"
#include "spider/errors.hpp"

namespace spider {

/// A point of the normalized family
///
///   p = 0:   E(z) = exp(lambda z)
///   p >= 1:  E(z) = alpha z^p exp(lambda z),  alpha = (-lambda/p)^p e^p
///
/// The alpha normalization makes E(crit) = 1 at the free critical point
/// crit = -p/lambda.  For p = 0 there is no finite critical point and
/// alpha = 1.
struct ExpParams {
    int p = 0;
    cplx lambda{0.0, 0.0};
    cplx alpha{1.0, 0.0};
    cplx log_alpha{0.0, 0.0};  // a logarithm of alpha; principal by default
    cplx crit{0.0, 0.0};       // -p/lambda; meaningful only when p >= 1

    bool has_free_critical_point() const { return p >= 1; }
};

/// Normalizing coefficient for p >= 1.  The complex power is taken by
/// integer exponentiation of -lambda/p, so no branch choice enters.
cplx alpha_from_lambda(int p, cplx lambda);

/// Build validated parameters.  Throws invalid_parameter when lambda = 0
/// or p < 0.
ExpParams make_params(int p, cplx lambda);

/// E(z).  Exact zero for z = 0 with p >= 1.  Overflow of the exponential
/// yields the distinguished escape value (see escaped()), not a crash.
cplx evaluate(const ExpParams& params, cplx z);

/// E'(z)/E(z) = p/z + lambda.  Pole error at z = 0 when p >= 1.
cplx log_derivative(const ExpParams& params, cplx z);

/// Critical points with multiplicities: empty for p = 0, otherwise
/// {(0, p-1), (-p/lambda, 1)} with the origin omitted when p = 1.
std::vector<std::pair<cplx, int>> critical_points(const ExpParams& params);

struct InverseBranchOptions {
    int max_iter = 64;
    double tol = 1e-12;  // residual of the logarithmic equation
};

/// One preimage of w, selected by the sheet index m.
///
/// p = 0:   z = (Log w + 2 pi i m) / lambda with Log principal
///          (arg in (-pi, pi]).
/// p >= 1:  z solves p Log z + lambda z + Log alpha = Log w + 2 pi i m
///          by damped Newton from `seed` (default: the p = 0 formula
///          applied to w/alpha); the branch of Log z is continued from
///          the seed along the Newton path.
///
/// Throws no_preimage_error for w = 0 (the omitted/asymptotic value) and
/// nonconvergence_error (carrying the last iterate) when Newton fails.
cplx inverse_branch(const ExpParams& params, cplx w, long m,
                    std::optional<cplx> seed = std::nullopt,
                    const InverseBranchOptions& opts = {});

/// Same inverse, but with the logarithm of w supplied by the caller (any
/// branch).  The pullback uses this to hand in logs continued along the
/// motion of the marked points.
cplx inverse_branch_logw(const ExpParams& params, cplx log_w, long m,
                         std::optional<cplx> seed = std::nullopt,
                         const InverseBranchOptions& opts = {});

struct Orbit {
    std::vector<cplx> points;
    bool escaped = false;
};

/// [z0, E(z0), ..., E^n(z0)], truncated with the escape flag once the
/// magnitude passes escape_radius.
Orbit forward_orbit(const ExpParams& params, cplx z0, std::size_t n,
                    double escape_radius = 1e12);

}  // namespace spider
