#pragma once

#include <span>
#include <vector>

#include "spider/complex_ops.hpp"
#include "spider/exp_family.hpp"
#include "spider/portrait.hpp"
#include "spider/trace.hpp"

namespace spider {

/// Point of the Riemann sphere; either a finite complex number or the
/// point at infinity.
struct SpherePoint {
    cplx z{};
    bool at_infinity = false;

    static SpherePoint infinity() { return {cplx{}, true}; }
    static SpherePoint finite(cplx value) { return {value, false}; }
};

/// Chordal metric on the sphere, values in [0, 1]:
///   d(z, w)   = |z - w| / (sqrt(1+|z|^2) sqrt(1+|w|^2))
///   d(z, inf) = 1 / sqrt(1+|z|^2)
double spherical_distance(const SpherePoint& a, const SpherePoint& b);
double spherical_distance(cplx a, cplx b);
double spherical_distance_to_infinity(cplx a);

/// Minimum pairwise spherical gap over the given finite points together
/// with the point at infinity.
double min_spherical_gap(std::span<const cplx> finite_points);

struct WindingResult {
    long eta = 0;
    double residual = 0.0;  // |raw integral / 2 pi i  -  eta|
    long steps_used = 0;
};

struct WindingOptions {
    long steps = 4096;
    long max_steps = 1 << 20;  // doubled on residual failure up to here
    double residual_limit = 0.25;
    bool parallel = true;
};

/// Winding number of E(path) around 0: composite trapezoid of
/// E'/E = p/z + lambda along the polyline, divided by 2 pi i, snapped to
/// the nearest integer.  The step count doubles until the residual drops
/// below the limit; past max_steps this throws branch_tracking_error.
WindingResult compute_winding(const ExpParams& params,
                              std::span<const cplx> path,
                              const WindingOptions& opts = {});

/// Straight segment between the marked-pair positions.  For p >= 1 a
/// segment passing within 1e-6 of the origin is detoured along a
/// counterclockwise arc of radius 1e-6.
std::vector<cplx> marked_pair_path(cplx from, cplx to, int p);

/// True iff eta_n is one constant integer across all recorded steps
/// (vacuously true for a single-step trace).
bool check_eta_invariance(const IterationTrace& trace);

/// Per-step geometry snapshot derived from a trace: the step's minimum
/// spherical gap, the running extremes of the marked-pair data, the
/// winding number, and the compactness bound evaluated at this step.
struct GeometryReport {
    double b_n = 0.0;
    double kappa = 0.0;  // running min of the per-step kappa
    double K = 0.0;      // running max of the pair magnitudes
    long eta_n = 0;
    double lambda_bound = 0.0;  // upper bound on |lambda_n| at this step
    bool ok = false;
};

std::vector<GeometryReport> geometry_reports(const IterationTrace& trace,
                                             const OrbitPortrait& portrait);

struct LambdaBoundsReport {
    bool applicable = true;  // false for the degenerate 3-point portrait
    bool holds = true;
    bool pair_degenerate = false;
    double kappa = 0.0;          // min over steps of the per-step kappa
    double K = 0.0;              // max over steps of the pair magnitudes
    double tightest_ratio = 0.0; // max over steps of |lambda_n| / bound_n
    long worst_step = -1;
};

/// Per-step compactness bound with the step's own measured kappa_n, K_n:
///   p = 0:   |lambda_n| <= 2 pi |eta_n| / kappa_n,
///            kappa_n the Euclidean distance of the marked-pair positions;
///   p >= 1:  |lambda_n| <= (2 pi |eta_n| + log K_n - log kappa_n + 4 pi)
///            / kappa_n, with kappa_n also capped by the pair magnitudes.
/// A collision (kappa_n = 0) throws bounded_geometry_error, except for a
/// degenerate pair (periodic critical point), where the pair distance
/// drops out and the magnitudes alone are used.
LambdaBoundsReport check_lambda_bounds(const IterationTrace& trace,
                                       const OrbitPortrait& portrait,
                                       double slack = 1e-9);

}  // namespace spider
