#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "spider/complex_ops.hpp"
#include "spider/exp_family.hpp"
#include "spider/portrait.hpp"
#include "spider/trace.hpp"

namespace spider {

/// Positions of the finite marked points, indexed by portrait id;
/// infinity is implicit.  0 and 1 are pinned bit-exactly.
///
/// args[id] is the unwound argument of positions[id], continued along the
/// point's motion from step to step (initially principal).  Sheet indices
/// are labeled in the principal convention of the initial configuration;
/// evaluating the pullback logs in this continued frame keeps the
/// iteration continuous when a point crosses the negative real axis.
struct MarkedConfiguration {
    std::vector<cplx> positions;
    std::vector<double> args;
    long n = 0;  // step counter

    std::span<const cplx> finite_points() const { return positions; }

    /// Reset args to the principal arguments of the current positions.
    void reset_args();
};

/// Forward orbit of the singular value under the seed map, mapped onto
/// the portrait ids.  Positions closer than 1e-6 spherically are
/// perturbed deterministically (the j-th colliding point moves by
/// j * 1e-4 * (1+i)), after which 0 and 1 are re-pinned.  An escaping
/// seed orbit throws seed_rejected_error.
MarkedConfiguration initial_configuration(const OrbitPortrait& portrait,
                                          cplx seed_lambda);

/// Parameters of E_n from the closing equation at the pinned point 1:
/// E_n(1) must equal the current position of successor(1).
///
///   p = 0:   lambda = Log z2 + 2 pi i m1   (Log principal)
///   p >= 1:  lambda solves p Log(-lambda/p) + p + lambda
///            = Log z2 + 2 pi i m1 by damped Newton seeded at
///            prev->lambda, branch continued from the seed.
///
/// m1 is the address entry of the 1-point.
ExpParams solve_lambda(const OrbitPortrait& portrait, const BranchAddress& address,
                       const MarkedConfiguration& config,
                       const std::optional<ExpParams>& prev);

/// One pullback: 0, 1 (and infinity) stay pinned; for p >= 1 the free
/// critical point moves to -p/lambda, the critical preimage of 1; every
/// other index k moves to inverse_branch(positions[successor(k)],
/// address[k]).  Afterwards every index is checked against
/// |E(new_k) - old_{successor(k)}| <= tol * max(1, |old_succ|); the
/// worst absolute residual is written to *conjugacy_residual when given.
MarkedConfiguration pullback_step(const OrbitPortrait& portrait,
                                  const BranchAddress& address,
                                  const MarkedConfiguration& config,
                                  const ExpParams& params,
                                  double conjugacy_tol = 1e-9,
                                  double* conjugacy_residual = nullptr);

/// Fill address entries the document left out, using the seed map: each
/// point gets the sheet label of its own seed position as an approximate
/// preimage of its successor's position.  Explicit entries are kept.
BranchAddress derive_addresses(const OrbitPortrait& portrait,
                               const BranchAddress& given,
                               const MarkedConfiguration& init,
                               const ExpParams& seed_params);

struct IterationOptions {
    RunTolerances tolerances;
    std::optional<cplx> seed_lambda;  // Newton seed for the first solve (p >= 1)
    bool parallel_winding = true;
};

struct IterationResult {
    IterationTrace trace;
    std::optional<ExpParams> params;  // set iff converged
    MarkedConfiguration final_config;
    BranchAddress used_address;       // includes derived entries
};

using StepObserver = std::function<void(long n, const MarkedConfiguration&)>;

/// The Thurston iteration loop: solve_lambda + pullback_step until the
/// max spherical displacement drops to tolerances.tol, or a divergence
/// condition fires (|lambda| > lambda_max, min gap < gap_min, or the
/// iteration cap).  Step errors are rethrown annotated with the step
/// number.
IterationResult iterate(const OrbitPortrait& portrait, const BranchAddress& address,
                        const MarkedConfiguration& init, const IterationOptions& opts,
                        const StepObserver& observer = {});

}  // namespace spider
