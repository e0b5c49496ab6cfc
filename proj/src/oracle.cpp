#include "spider/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "spider/diagnostics.hpp"

namespace spider {

namespace {

// Portrait id standing at orbit position t, cycling past the chain end.
int id_at_position(const OrbitPortrait& portrait, long t)
{
    const long chain_last = static_cast<long>(portrait.chain.size()) - 1;
    const long entry = chain_last - portrait.l;
    if (t < chain_last) return portrait.chain[static_cast<std::size_t>(t)];
    return portrait.chain[static_cast<std::size_t>(entry + (t - entry) % portrait.l)];
}

// Realized orbit positions x_0 .. x_last starting at 0 (p = 0) or at the
// critical point (p >= 1); x_1 is the singular value 1 exactly.
std::optional<std::vector<cplx>> realized_orbit(const ExpParams& params,
                                                long last)
{
    std::vector<cplx> x;
    x.reserve(static_cast<std::size_t>(last) + 1);
    x.push_back(params.p == 0 ? cplx{} : params.crit);
    if (last >= 1) x.push_back(cplx{1.0, 0.0});
    for (long t = 2; t <= last; ++t) {
        const cplx v = evaluate(params, x.back());
        if (escaped(v) || std::abs(v) > 1e12) return std::nullopt;
        x.push_back(v);
    }
    return x;
}

}  // namespace

OrbitVerification verify_orbit(const ExpParams& params,
                               const OrbitPortrait& portrait, double tol)
{
    OrbitVerification report;
    report.tol = tol;
    report.min_separation = 1.0;

    const long last = portrait.k1 + 2L * portrait.l + 1;
    const auto orbit = realized_orbit(params, last);
    if (!orbit) {
        report.escaped = true;
        return report;
    }
    const std::vector<cplx>& x = *orbit;

    // (a) closure of the cycle entry after l steps
    report.closure_error =
        spherical_distance(x[portrait.k1 + portrait.l + 1], x[portrait.k1 + 1]);
    report.closure_ok = report.closure_error <= tol;

    // (b) distinct portrait points realized apart (first occurrences, the
    // fixed 0 for p >= 1, and infinity)
    std::vector<cplx> realized(portrait.names.size(), cplx{});
    for (std::size_t i = 0; i + 1 < portrait.chain.size(); ++i)
        realized[portrait.chain[i]] = x[i];
    if (portrait.p >= 1) realized[portrait.zero_id] = cplx{};

    report.separation_ok = true;
    for (std::size_t i = 0; i < realized.size(); ++i) {
        report.min_separation =
            std::min(report.min_separation, spherical_distance_to_infinity(realized[i]));
        for (std::size_t k = i + 1; k < realized.size(); ++k)
            report.min_separation = std::min(
                report.min_separation, spherical_distance(realized[i], realized[k]));
    }
    if (report.min_separation < 10.0 * tol) report.separation_ok = false;

    // (c) the collision pattern over the whole computed span must match
    // the successor map: equal ids collide, different ids stay apart
    report.pattern_ok = true;
    for (long i = 0; i <= last && report.pattern_ok; ++i) {
        for (long k = i + 1; k <= last; ++k) {
            const bool same_id = id_at_position(portrait, i) == id_at_position(portrait, k);
            const double d =
                spherical_distance(x[static_cast<std::size_t>(i)],
                                   x[static_cast<std::size_t>(k)]);
            if (same_id ? d > tol : d < 10.0 * tol) {
                report.pattern_ok = false;
                break;
            }
        }
    }

    report.pass = report.closure_ok && report.separation_ok && report.pattern_ok;
    return report;
}

cplx newton_direct_solve(const OrbitPortrait& portrait, int p, cplx lambda_seed,
                         const DirectSolveOptions& opts)
{
    if (p != portrait.p)
        throw invalid_parameter("newton_direct_solve: p disagrees with the portrait");
    if (lambda_seed == cplx{})
        throw invalid_parameter("newton_direct_solve: seed lambda must be nonzero");

    const long k1 = portrait.k1;
    const long l = portrait.l;
    const bool superattracting = portrait.p >= 1 && portrait.pair_degenerate;
    auto G = [&](cplx lam) -> std::optional<cplx> {
        if (lam == cplx{}) return std::nullopt;
        const ExpParams params = make_params(p, lam);
        if (superattracting) {
            // With c on the cycle, E^{k1+l}(s) - E^{k1}(s) has a double
            // root (both E' and the lambda-derivative of E vanish along
            // the critical cycle); the equivalent critical-slot closure
            // E^{l-1}(s) = -p/lambda is simple.
            const auto orbit = realized_orbit(params, l);
            if (!orbit) return std::nullopt;
            return (*orbit)[static_cast<std::size_t>(l)] - params.crit;
        }
        const auto orbit = realized_orbit(params, k1 + l + 1);
        if (!orbit) return std::nullopt;
        // s = x_1; E^k(s) = x_{k+1}
        return (*orbit)[static_cast<std::size_t>(k1 + l + 1)] -
               (*orbit)[static_cast<std::size_t>(k1 + 1)];
    };

    cplx lam = lambda_seed;
    auto g = G(lam);
    if (!g)
        throw seed_rejected_error("newton_direct_solve: seed orbit escapes");

    for (int iter = 0; iter < opts.max_iter; ++iter) {
        if (std::abs(*g) <= opts.g_tol) break;
        const cplx delta = opts.fd_step * lam;
        const auto g_plus = G(lam + delta);
        const auto g_minus = G(lam - delta);
        if (!g_plus || !g_minus)
            throw nonconvergence_error(
                "newton_direct_solve: finite difference hit an escaping orbit", lam);
        const cplx dg = (*g_plus - *g_minus) / (2.0 * delta);
        if (dg == cplx{} || !std::isfinite(std::abs(dg)))
            throw nonconvergence_error("newton_direct_solve: vanishing derivative",
                                       lam);
        cplx step = *g / dg;
        bool improved = false;
        for (int halving = 0; halving < 12; ++halving) {
            const cplx lam_next = lam - step;
            const auto g_next = G(lam_next);
            if (g_next && std::abs(*g_next) < std::abs(*g)) {
                lam = lam_next;
                g = g_next;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if (!improved)
            throw nonconvergence_error("newton_direct_solve: damped Newton stalled",
                                       lam);
    }
    if (std::abs(*g) > opts.g_tol)
        throw nonconvergence_error("newton_direct_solve: iteration cap reached", lam);

    const OrbitVerification check =
        verify_orbit(make_params(p, lam), portrait, opts.verify_tol);
    if (!check.pass)
        throw wrong_basin_error(
            "newton_direct_solve: converged to a portrait-violating root", lam);
    return lam;
}

}  // namespace spider
