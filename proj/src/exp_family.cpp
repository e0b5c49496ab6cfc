#include "spider/exp_family.hpp"

#include <cmath>

namespace spider {

namespace {

// exp overflows just above 709.78; stay clear of it.
constexpr double kLogOverflow = 709.0;

}  // namespace

cplx alpha_from_lambda(int p, cplx lambda)
{
    if (p < 1) throw invalid_parameter("alpha_from_lambda: p must be >= 1");
    if (lambda == cplx{}) throw invalid_parameter("alpha_from_lambda: lambda = 0");
    // (-lambda/p)^p e^p, the unique coefficient with E(-p/lambda) = 1.
    return cpow_int(-lambda / static_cast<double>(p), p) * std::exp(static_cast<double>(p));
}

ExpParams make_params(int p, cplx lambda)
{
    if (p < 0) throw invalid_parameter("make_params: p must be >= 0");
    if (lambda == cplx{}) throw invalid_parameter("make_params: lambda = 0");
    ExpParams params;
    params.p = p;
    params.lambda = lambda;
    if (p >= 1) {
        params.alpha = alpha_from_lambda(p, lambda);
        params.log_alpha = principal_log(params.alpha);
        params.crit = -static_cast<double>(p) / lambda;
    }
    return params;
}

cplx evaluate(const ExpParams& params, cplx z)
{
    if (params.p >= 1 && z == cplx{}) return {};

    const cplx lz = params.lambda * z;
    double logmag = lz.real();
    if (params.p >= 1)
        logmag += params.p * std::log(std::abs(z)) + std::log(std::abs(params.alpha));
    if (logmag > kLogOverflow) return escape_value();

    if (std::abs(lz.real()) > kLogOverflow - 20.0) {
        // The exponential factor alone would over/underflow even though the
        // product is representable; exp(p Log z) = z^p exactly for integer p,
        // so the log form is branch-free.
        cplx expo = lz;
        if (params.p >= 1)
            expo += static_cast<double>(params.p) * principal_log(z) + params.log_alpha;
        return std::exp(expo);
    }

    cplx w = std::exp(lz);
    if (params.p >= 1) w *= params.alpha * cpow_int(z, params.p);
    return w;
}

cplx log_derivative(const ExpParams& params, cplx z)
{
    if (params.p == 0) return params.lambda;
    if (z == cplx{}) throw pole_error("log_derivative: z = 0 is a pole of E'/E");
    return static_cast<double>(params.p) / z + params.lambda;
}

std::vector<std::pair<cplx, int>> critical_points(const ExpParams& params)
{
    std::vector<std::pair<cplx, int>> pts;
    if (params.p == 0) return pts;
    if (params.p >= 2) pts.emplace_back(cplx{}, params.p - 1);
    pts.emplace_back(params.crit, 1);
    return pts;
}

cplx inverse_branch(const ExpParams& params, cplx w, long m,
                    std::optional<cplx> seed, const InverseBranchOptions& opts)
{
    if (w == cplx{})
        throw no_preimage_error("inverse_branch: w = 0 has no preimage here");
    return inverse_branch_logw(params, principal_log(w), m, seed, opts);
}

cplx inverse_branch_logw(const ExpParams& params, cplx log_w, long m,
                         std::optional<cplx> seed, const InverseBranchOptions& opts)
{
    const cplx target = log_w + cplx{0.0, two_pi * static_cast<double>(m)};

    if (params.p == 0) return target / params.lambda;

    // Sheet equation  p L(z) + lambda z = t,  L continued from the seed.
    const cplx t = target - params.log_alpha;
    cplx z = seed.value_or(t / params.lambda);
    if (std::abs(z) < 1e-14) z = params.crit;

    const double pd = static_cast<double>(params.p);
    double theta = std::arg(z);
    auto residual = [&](cplx zz, double th) {
        return pd * cplx{std::log(std::abs(zz)), th} + params.lambda * zz - t;
    };

    cplx r = residual(z, theta);
    for (int iter = 0; iter < opts.max_iter; ++iter) {
        if (std::abs(r) <= opts.tol) return z;
        const cplx deriv = pd / z + params.lambda;
        if (deriv == cplx{} || !std::isfinite(std::abs(deriv)))
            throw nonconvergence_error("inverse_branch: vanishing derivative", z);
        cplx step = r / deriv;
        cplx z_next;
        double theta_next = theta;
        cplx r_next;
        bool improved = false;
        for (int halving = 0; halving < 12; ++halving) {
            z_next = z - step;
            if (z_next != cplx{} && std::isfinite(std::abs(z_next))) {
                theta_next = unwind_near(std::arg(z_next), theta);
                r_next = residual(z_next, theta_next);
                if (std::abs(r_next) < std::abs(r)) {
                    improved = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if (!improved)
            throw nonconvergence_error("inverse_branch: damped Newton stalled", z);
        z = z_next;
        theta = theta_next;
        r = r_next;
    }
    if (std::abs(r) <= opts.tol) return z;
    throw nonconvergence_error("inverse_branch: iteration cap reached", z);
}

Orbit forward_orbit(const ExpParams& params, cplx z0, std::size_t n,
                    double escape_radius)
{
    Orbit orbit;
    orbit.points.reserve(n + 1);
    orbit.points.push_back(z0);
    cplx z = z0;
    for (std::size_t k = 0; k < n; ++k) {
        z = evaluate(params, z);
        if (escaped(z) || std::abs(z) > escape_radius) {
            orbit.escaped = true;
            return orbit;
        }
        orbit.points.push_back(z);
    }
    return orbit;
}

}  // namespace spider
