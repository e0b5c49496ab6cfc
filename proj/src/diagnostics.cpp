#include "spider/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "spider/parallel.hpp"

namespace spider {

const char* to_string(RunStatus status)
{
    switch (status) {
        case RunStatus::converged: return "converged";
        case RunStatus::diverged_lambda: return "diverged-lambda";
        case RunStatus::collision: return "collision";
        case RunStatus::iteration_cap: return "iteration-cap";
    }
    return "unknown";
}

double spherical_distance(cplx a, cplx b)
{
    return std::abs(a - b) / std::sqrt((1.0 + std::norm(a)) * (1.0 + std::norm(b)));
}

double spherical_distance_to_infinity(cplx a)
{
    return 1.0 / std::sqrt(1.0 + std::norm(a));
}

double spherical_distance(const SpherePoint& a, const SpherePoint& b)
{
    if (a.at_infinity && b.at_infinity) return 0.0;
    if (a.at_infinity) return spherical_distance_to_infinity(b.z);
    if (b.at_infinity) return spherical_distance_to_infinity(a.z);
    return spherical_distance(a.z, b.z);
}

double min_spherical_gap(std::span<const cplx> finite_points)
{
    double gap = 1.0;
    for (std::size_t i = 0; i < finite_points.size(); ++i) {
        gap = std::min(gap, spherical_distance_to_infinity(finite_points[i]));
        for (std::size_t k = i + 1; k < finite_points.size(); ++k)
            gap = std::min(gap, spherical_distance(finite_points[i], finite_points[k]));
    }
    return gap;
}

namespace {

double polyline_length(std::span<const cplx> path)
{
    double len = 0.0;
    for (std::size_t i = 0; i + 1 < path.size(); ++i)
        len += std::abs(path[i + 1] - path[i]);
    return len;
}

// Trapezoid sum of p/z + lambda along the polyline with `steps` total
// subdivisions distributed by segment length.
cplx winding_integral(const ExpParams& params, std::span<const cplx> path,
                      long steps, bool parallel)
{
    const double total = polyline_length(path);
    cplx integral{};
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        const cplx a = path[i];
        const cplx b = path[i + 1];
        const double len = std::abs(b - a);
        if (len == 0.0) continue;
        const long nseg = std::max<long>(
            1, std::lround(static_cast<double>(steps) * len / total));
        const cplx dz = (b - a) / static_cast<double>(nseg);
        integral += chunked_accumulate<cplx>(
            static_cast<std::size_t>(nseg),
            [&](std::size_t k) {
                const cplx z0 = a + dz * static_cast<double>(k);
                const cplx z1 = z0 + dz;
                return 0.5 * (log_derivative(params, z0) + log_derivative(params, z1)) * dz;
            },
            parallel);
    }
    return integral;
}

}  // namespace

WindingResult compute_winding(const ExpParams& params,
                              std::span<const cplx> path,
                              const WindingOptions& opts)
{
    if (path.size() < 2 || polyline_length(path) == 0.0)
        return {0, 0.0, 0};

    long steps = std::max<long>(2, opts.steps);
    for (;; steps *= 2) {
        const cplx raw =
            winding_integral(params, path, steps, opts.parallel) / cplx{0.0, two_pi};
        const long eta = std::lround(raw.real());
        const double residual = std::abs(raw - cplx{static_cast<double>(eta), 0.0});
        if (residual <= opts.residual_limit)
            return {eta, residual, steps};
        if (steps >= opts.max_steps)
            throw branch_tracking_error(
                "compute_winding: residual " + std::to_string(residual) +
                " too large at " + std::to_string(steps) + " steps");
    }
}

std::vector<cplx> marked_pair_path(cplx from, cplx to, int p)
{
    if (from == to) return {from};
    if (p < 1) return {from, to};

    const double r = 1e-6;
    if (std::abs(from) <= r || std::abs(to) <= r)
        throw branch_tracking_error("marked_pair_path: endpoint within the "
                                    "detour disk around 0");

    // Distance from the origin to the segment.
    const cplx d = to - from;
    const double len2 = std::norm(d);
    const double t_foot =
        std::clamp(-(from.real() * d.real() + from.imag() * d.imag()) / len2, 0.0, 1.0);
    if (std::abs(from + t_foot * d) >= r) return {from, to};

    // Segment crosses the disk: |from + t d|^2 = r^2 has two roots in (0,1).
    const double bq = 2.0 * (from.real() * d.real() + from.imag() * d.imag());
    const double cq = std::norm(from) - r * r;
    const double disc = bq * bq - 4.0 * len2 * cq;
    const double sq = std::sqrt(std::max(disc, 0.0));
    const double t1 = (-bq - sq) / (2.0 * len2);
    const double t2 = (-bq + sq) / (2.0 * len2);

    const cplx enter = from + t1 * d;
    const cplx exit = from + t2 * d;
    const double th1 = std::arg(enter);
    double th2 = std::arg(exit);
    while (th2 <= th1) th2 += two_pi;  // counterclockwise arc

    std::vector<cplx> path;
    path.push_back(from);
    const int arc_nodes = 64;
    for (int k = 0; k <= arc_nodes; ++k) {
        const double th = th1 + (th2 - th1) * static_cast<double>(k) / arc_nodes;
        path.push_back(r * cplx{std::cos(th), std::sin(th)});
    }
    path.push_back(to);
    return path;
}

bool check_eta_invariance(const IterationTrace& trace)
{
    if (trace.steps.empty()) return true;
    const long eta = trace.steps.front().eta;
    return std::all_of(trace.steps.begin(), trace.steps.end(),
                       [&](const StepRecord& s) { return s.eta == eta; });
}

namespace {

// Per-step kappa_n and compactness bound on |lambda_n|.
//   p = 0:   bound = 2 pi |eta| / kappa_n with kappa_n the Euclidean
//            distance of the marked-pair positions;
//   p >= 1:  bound = (2 pi |eta| + log K_n - log kappa_n + 4 pi) / kappa_n
//            with the pair magnitudes joining the minimum;
//   periodic critical point (degenerate pair): the pair distance drops
//   out, leaving 4 pi / |c_n|.
struct StepBound {
    double kappa_n = 0.0;
    double K_n = 0.0;
    double bound_n = 0.0;
};

StepBound step_bound(const StepRecord& step, const OrbitPortrait& portrait)
{
    const cplx z1 = step.pair_first;
    const cplx z2 = step.pair_second;
    StepBound result;
    double numerator;
    if (portrait.pair_degenerate) {
        result.kappa_n = std::abs(z1);
        numerator = 2.0 * two_pi;
    } else if (portrait.p == 0) {
        result.kappa_n = std::abs(z2 - z1);
        numerator = two_pi * std::abs(static_cast<double>(step.eta));
    } else {
        result.kappa_n = std::min({std::abs(z2 - z1), std::abs(z1), std::abs(z2)});
        const double K_n = std::max(std::abs(z1), std::abs(z2));
        numerator = two_pi * std::abs(static_cast<double>(step.eta)) +
                    std::log(K_n) - std::log(result.kappa_n) + 2.0 * two_pi;
    }
    result.K_n = std::max(std::abs(z1), std::abs(z2));
    if (result.kappa_n == 0.0)
        throw bounded_geometry_error(
            "marked-pair collision at step " + std::to_string(step.n));
    result.bound_n = numerator / result.kappa_n;
    return result;
}

}  // namespace

std::vector<GeometryReport> geometry_reports(const IterationTrace& trace,
                                             const OrbitPortrait& portrait)
{
    std::vector<GeometryReport> reports;
    reports.reserve(trace.steps.size());
    double run_kappa = std::numeric_limits<double>::infinity();
    double run_K = 0.0;
    for (const StepRecord& step : trace.steps) {
        const StepBound bound = step_bound(step, portrait);
        run_kappa = std::min(run_kappa, bound.kappa_n);
        run_K = std::max(run_K, bound.K_n);
        GeometryReport g;
        g.b_n = step.min_gap;
        g.kappa = run_kappa;
        g.K = run_K;
        g.eta_n = step.eta;
        g.lambda_bound = bound.bound_n;
        g.ok = std::abs(step.lambda) <= bound.bound_n * (1.0 + 1e-9) + 1e-9;
        reports.push_back(g);
    }
    return reports;
}

LambdaBoundsReport check_lambda_bounds(const IterationTrace& trace,
                                       const OrbitPortrait& portrait,
                                       double slack)
{
    LambdaBoundsReport report;
    report.pair_degenerate = portrait.pair_degenerate;
    if (portrait.degenerate_three || trace.steps.empty()) {
        report.applicable = false;
        return report;
    }

    report.kappa = std::numeric_limits<double>::infinity();
    for (const StepRecord& step : trace.steps) {
        const StepBound bound = step_bound(step, portrait);
        const double ratio =
            bound.bound_n > 0.0 ? std::abs(step.lambda) / bound.bound_n
                                : std::numeric_limits<double>::infinity();
        if (ratio > report.tightest_ratio) {
            report.tightest_ratio = ratio;
            report.worst_step = step.n;
        }
        if (std::abs(step.lambda) > bound.bound_n * (1.0 + slack) + slack)
            report.holds = false;
        report.kappa = std::min(report.kappa, bound.kappa_n);
        report.K = std::max(report.K, bound.K_n);
    }
    return report;
}

}  // namespace spider
