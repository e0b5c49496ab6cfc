#pragma once

#include "spider/complex_ops.hpp"
#include "spider/exp_family.hpp"
#include "spider/portrait.hpp"

namespace spider {

struct OrbitVerification {
    bool pass = false;
    bool closure_ok = false;     // cycle entry returns to itself after l steps
    bool separation_ok = false;  // distinct portrait points stay >= 10 tol apart
    bool pattern_ok = false;     // collision pattern matches the successor map
    bool escaped = false;
    double closure_error = 0.0;
    double min_separation = 0.0;
    double tol = 0.0;
};

/// Forward-orbit closure check: iterates the singular value through
/// k1 + 2l steps and compares the realized collision pattern against the
/// portrait.  Distances are spherical.
OrbitVerification verify_orbit(const ExpParams& params,
                               const OrbitPortrait& portrait, double tol);

struct DirectSolveOptions {
    double g_tol = 1e-12;
    int max_iter = 200;
    double fd_step = 1e-7;      // relative step of the central difference
    double verify_tol = 1e-9;
};

/// Ground-truth solve: Newton in the lambda plane on
/// G(lambda) = E^{k1+l}(s) - E^{k1}(s), derivative by central finite
/// differences.  Basin selection is purely by seed.  A root whose orbit
/// violates the portrait raises wrong_basin_error.
cplx newton_direct_solve(const OrbitPortrait& portrait, int p, cplx lambda_seed,
                         const DirectSolveOptions& opts = {});

}  // namespace spider
