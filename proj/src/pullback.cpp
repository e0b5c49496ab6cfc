#include "spider/pullback.hpp"

#include <algorithm>
#include <cmath>

#include "spider/diagnostics.hpp"

namespace spider {

void MarkedConfiguration::reset_args()
{
    args.resize(positions.size());
    for (std::size_t i = 0; i < positions.size(); ++i)
        args[i] = std::arg(positions[i]);
}

namespace {

constexpr double kCollisionGap = 1e-6;

void pin(const OrbitPortrait& portrait, MarkedConfiguration& config)
{
    config.positions[portrait.zero_id] = cplx{0.0, 0.0};
    config.positions[portrait.one_id] = cplx{1.0, 0.0};
}

// Unwound argument of positions[id]; principal when the configuration
// does not carry tracked arguments (hand-built configurations).
double tracked_arg(const MarkedConfiguration& config, int id)
{
    if (static_cast<std::size_t>(id) < config.args.size())
        return config.args[static_cast<std::size_t>(id)];
    return std::arg(config.positions[static_cast<std::size_t>(id)]);
}

cplx tracked_log(const MarkedConfiguration& config, int id)
{
    return {std::log(std::abs(config.positions[static_cast<std::size_t>(id)])),
            tracked_arg(config, id)};
}

// Sheet label of z as an approximate preimage of w under params:
// nearest integer to Im(p Log z + lambda z + Log alpha - Log w) / 2 pi.
long sheet_label(const ExpParams& params, cplx z, cplx w)
{
    cplx lhs = params.lambda * z;
    if (params.p >= 1)
        lhs += static_cast<double>(params.p) * principal_log(z) +
               principal_log(params.alpha);
    return std::lround((lhs.imag() - principal_log(w).imag()) / two_pi);
}

}  // namespace

MarkedConfiguration initial_configuration(const OrbitPortrait& portrait,
                                          cplx seed_lambda)
{
    if (seed_lambda == cplx{})
        throw invalid_parameter("initial_configuration: seed lambda must be nonzero");
    const ExpParams params = make_params(portrait.p, seed_lambda);

    MarkedConfiguration config;
    config.positions.assign(portrait.names.size(), cplx{});
    if (portrait.p >= 1) config.positions[portrait.zero_id] = cplx{};

    // Walk the orbit chain; each id occurs once before the cycle marker.
    cplx v = portrait.p == 0 ? cplx{} : params.crit;
    for (std::size_t i = 0; i + 1 < portrait.chain.size(); ++i) {
        if (i == 1) v = cplx{1.0, 0.0};  // the singular value, exactly
        else if (i > 1) {
            v = evaluate(params, v);
            if (escaped(v) || std::abs(v) > 1e12)
                throw seed_rejected_error(
                    "initial_configuration: seed orbit escapes");
        }
        config.positions[portrait.chain[i]] = v;
    }
    pin(portrait, config);

    // Deterministic perturbation of colliding points, pinned ones excluded.
    int collision_count = 0;
    for (std::size_t i = 0; i + 1 < portrait.chain.size(); ++i) {
        const int id = portrait.chain[i];
        if (id == portrait.zero_id || id == portrait.one_id) continue;
        bool collides = false;
        for (int other = 0; other < static_cast<int>(config.positions.size());
             ++other) {
            if (other == id) continue;
            if (spherical_distance(config.positions[id], config.positions[other]) <
                kCollisionGap) {
                collides = true;
                break;
            }
        }
        if (collides) {
            ++collision_count;
            config.positions[id] +=
                static_cast<double>(collision_count) * 1e-4 * cplx{1.0, 1.0};
        }
    }
    pin(portrait, config);
    config.reset_args();
    config.n = 0;
    return config;
}

ExpParams solve_lambda(const OrbitPortrait& portrait, const BranchAddress& address,
                       const MarkedConfiguration& config,
                       const std::optional<ExpParams>& prev)
{
    const auto m1 = address.lookup(portrait.one_id);
    if (!m1)
        throw configuration_error(
            "solve_lambda: no address entry for the 1-point (lambda branch)");

    const int succ_one = portrait.successor[portrait.one_id];
    const cplx z2 = config.positions[succ_one];
    if (z2 == cplx{} || escaped(z2))
        throw configuration_error(
            "solve_lambda: position of successor(1) is zero or undefined");

    const cplx target =
        tracked_log(config, succ_one) + cplx{0.0, two_pi * static_cast<double>(*m1)};

    if (portrait.p == 0) {
        if (target == cplx{})
            throw invalid_parameter(
                "solve_lambda: closing equation gives lambda = 0; pick a "
                "nonzero branch for the 1-point");
        return make_params(0, target);
    }

    if (!prev)
        throw configuration_error(
            "solve_lambda: p >= 1 requires a lambda seed (prev params)");

    // F(lambda) = p L(-lambda/p) + p + lambda - target, L continued from
    // the seed along the Newton path.
    const double pd = static_cast<double>(portrait.p);
    cplx lam = prev->lambda;
    double theta = std::arg(-lam / pd);
    auto residual = [&](cplx l, double th) {
        return pd * cplx{std::log(std::abs(l / pd)), th} + pd + l - target;
    };

    cplx r = residual(lam, theta);
    for (int iter = 0; iter < 64; ++iter) {
        if (std::abs(r) <= 1e-12) break;
        const cplx deriv = pd / lam + 1.0;
        if (deriv == cplx{} || !std::isfinite(std::abs(deriv)))
            throw nonconvergence_error("solve_lambda: vanishing derivative", lam);
        cplx step = r / deriv;
        bool improved = false;
        cplx lam_next;
        double theta_next = theta;
        cplx r_next;
        for (int halving = 0; halving < 12; ++halving) {
            lam_next = lam - step;
            if (lam_next != cplx{} && std::isfinite(std::abs(lam_next))) {
                theta_next = unwind_near(std::arg(-lam_next / pd), theta);
                r_next = residual(lam_next, theta_next);
                if (std::abs(r_next) < std::abs(r)) {
                    improved = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if (!improved)
            throw nonconvergence_error("solve_lambda: damped Newton stalled", lam);
        lam = lam_next;
        theta = theta_next;
        r = r_next;
    }
    if (std::abs(r) > 1e-12)
        throw nonconvergence_error("solve_lambda: iteration cap reached", lam);
    ExpParams params = make_params(portrait.p, lam);
    // Keep the log of alpha on the branch the Newton path continued to, so
    // subsequent sheet equations stay in the same frame.
    params.log_alpha = pd * cplx{std::log(std::abs(lam / pd)), theta} + pd;
    return params;
}

MarkedConfiguration pullback_step(const OrbitPortrait& portrait,
                                  const BranchAddress& address,
                                  const MarkedConfiguration& config,
                                  const ExpParams& params,
                                  double conjugacy_tol,
                                  double* conjugacy_residual)
{
    MarkedConfiguration next;
    next.positions.assign(config.positions.size(), cplx{});
    next.n = config.n + 1;
    pin(portrait, next);
    if (portrait.p >= 1) next.positions[portrait.crit_id] = params.crit;

    for (int id : portrait.pulled_back_ids()) {
        const int succ = portrait.successor[id];
        const cplx w = config.positions[succ];
        if (w == cplx{})
            throw no_preimage_error("pullback_step: successor position of '" +
                                    portrait.names[id] + "' is the omitted value 0");
        const auto m = address.lookup(id);
        if (!m)
            throw configuration_error("pullback_step: no address entry for '" +
                                      portrait.names[id] + "'");
        try {
            next.positions[id] = inverse_branch_logw(params, tracked_log(config, succ), *m);
        } catch (const nonconvergence_error& e) {
            throw nonconvergence_error("pullback_step: inverse branch for '" +
                                           portrait.names[id] + "': " + e.what(),
                                       e.last_iterate);
        }
    }

    next.args.resize(next.positions.size());
    for (std::size_t id = 0; id < next.positions.size(); ++id)
        next.args[id] = unwind_near(std::arg(next.positions[id]),
                                    tracked_arg(config, static_cast<int>(id)));
    next.args[portrait.one_id] = 0.0;
    next.args[portrait.zero_id] = 0.0;

    double worst = 0.0;
    for (int id = 0; id < static_cast<int>(next.positions.size()); ++id) {
        const cplx want = config.positions[portrait.successor[id]];
        const cplx got = evaluate(params, next.positions[id]);
        const double err = std::abs(got - want);
        worst = std::max(worst, err);
        if (err > conjugacy_tol * std::max(1.0, std::abs(want)))
            throw postcondition_error(
                "pullback_step: semi-conjugacy residual at '" +
                portrait.names[id] + "' is " + std::to_string(err));
    }
    if (conjugacy_residual) *conjugacy_residual = worst;
    return next;
}

BranchAddress derive_addresses(const OrbitPortrait& portrait,
                               const BranchAddress& given,
                               const MarkedConfiguration& init,
                               const ExpParams& seed_params)
{
    BranchAddress address = given;
    auto fill = [&](int id) {
        if (address.entries.count(id)) return;
        const cplx z = id == portrait.one_id ? cplx{1.0, 0.0} : init.positions[id];
        const cplx w = init.positions[portrait.successor[id]];
        if (w == cplx{} || z == cplx{})
            throw configuration_error(
                "derive_addresses: cannot label a sheet through the origin");
        address.entries[id] = sheet_label(seed_params, z, w);
    };
    fill(portrait.one_id);
    for (int id : portrait.pulled_back_ids()) fill(id);
    return address;
}

IterationResult iterate(const OrbitPortrait& portrait, const BranchAddress& address,
                        const MarkedConfiguration& init, const IterationOptions& opts,
                        const StepObserver& observer)
{
    IterationResult result;
    result.final_config = init;

    std::optional<ExpParams> prev;
    if (opts.seed_lambda) prev = make_params(portrait.p, *opts.seed_lambda);

    result.used_address =
        prev ? derive_addresses(portrait, address, init, *prev) : address;
    {
        // Without a seed every entry must be explicit.
        const auto& entries = result.used_address.entries;
        if (!entries.count(portrait.one_id))
            throw configuration_error("iterate: missing lambda-branch address "
                                      "and no seed to derive it from");
        for (int id : portrait.pulled_back_ids())
            if (!entries.count(id))
                throw configuration_error("iterate: missing address for '" +
                                          portrait.names[id] +
                                          "' and no seed to derive it from");
    }

    const RunTolerances& tol = opts.tolerances;
    MarkedConfiguration config = init;
    if (observer) observer(0, config);

    for (long n = 1; n <= tol.max_iter; ++n) {
        StepRecord record;
        record.n = n;
        MarkedConfiguration next;
        try {
            const ExpParams params =
                solve_lambda(portrait, result.used_address, config, prev);
            next = pullback_step(portrait, result.used_address, config, params,
                                 1e-9, &record.conjugacy_residual);
            record.lambda = params.lambda;
            record.alpha = params.alpha;
            record.pair_first = next.positions[portrait.pair_first];
            record.pair_second = next.positions[portrait.pair_second];

            double displacement = 0.0;
            for (std::size_t i = 0; i < next.positions.size(); ++i)
                displacement = std::max(
                    displacement,
                    spherical_distance(config.positions[i], next.positions[i]));
            record.displacement = displacement;
            record.min_gap = min_spherical_gap(next.positions);

            WindingOptions wopts;
            wopts.steps = tol.winding_steps;
            wopts.parallel = opts.parallel_winding;
            const auto path = marked_pair_path(record.pair_first,
                                               record.pair_second, portrait.p);
            const WindingResult winding = compute_winding(params, path, wopts);
            record.eta = winding.eta;
            record.winding_residual = winding.residual;
            prev = params;
        } catch (const error& e) {
            throw error("step " + std::to_string(n) + ": " + e.what());
        }

        result.trace.steps.push_back(record);
        config = next;
        if (observer) observer(n, config);

        if (record.min_gap < tol.gap_min) {
            result.trace.status = RunStatus::collision;
            break;
        }
        if (std::abs(record.lambda) > tol.lambda_max) {
            result.trace.status = RunStatus::diverged_lambda;
            break;
        }
        if (record.displacement <= tol.tol) {
            result.trace.status = RunStatus::converged;
            result.params = *prev;
            break;
        }
    }

    result.final_config = config;
    return result;
}

}  // namespace spider
