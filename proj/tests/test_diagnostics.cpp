#include <doctest.h>

#include <cmath>
#include <random>

#include "spider/diagnostics.hpp"

using namespace spider;

namespace {

const double pi = 3.14159265358979323846;

SpherePoint random_point(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> coord(-50.0, 50.0);
    std::uniform_int_distribution<int> kind(0, 19);
    if (kind(rng) == 0) return SpherePoint::infinity();
    return SpherePoint::finite({coord(rng), coord(rng)});
}

}  // namespace

TEST_CASE("spherical distance closed forms")
{
    CHECK(spherical_distance(SpherePoint::finite({0, 0}), SpherePoint::infinity()) ==
          1.0);
    CHECK(spherical_distance(cplx{0, 0}, cplx{1, 0}) == 1.0 / std::sqrt(2.0));
    CHECK(std::abs(spherical_distance(cplx{0, 0}, cplx{1, 0}) -
                   0.7071067811865476) < 1e-15);
    CHECK(spherical_distance(cplx{1, 0}, cplx{-1, 0}) == 1.0);
}

TEST_CASE("spherical distance is a metric on the extended plane")
{
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 10000; ++trial) {
        const SpherePoint a = random_point(rng);
        const SpherePoint b = random_point(rng);
        const SpherePoint c = random_point(rng);
        const double ab = spherical_distance(a, b);
        const double ba = spherical_distance(b, a);
        const double ac = spherical_distance(a, c);
        const double cb = spherical_distance(c, b);
        CHECK(ab == ba);
        CHECK(ab >= 0.0);
        CHECK(ab <= 1.0 + 1e-15);
        CHECK(ab <= ac + cb + 1e-12);
    }
}

TEST_CASE("min spherical gap")
{
    const std::vector<cplx> three{cplx{0, 0}, cplx{1, 0}};
    CHECK(min_spherical_gap(three) == 1.0 / std::sqrt(2.0));

    const std::vector<cplx> four{cplx{0, 0}, cplx{1, 0}, cplx{-1, 0}};
    CHECK(min_spherical_gap(four) == 1.0 / std::sqrt(2.0));

    const std::vector<cplx> far{cplx{0, 0}, cplx{1, 0}, cplx{1e6, 0}};
    CHECK(min_spherical_gap(far) == spherical_distance_to_infinity(cplx{1e6, 0}));
    CHECK(min_spherical_gap(far) == doctest::Approx(1e-6).epsilon(1e-3));
}

TEST_CASE("winding number along the marked-pair segment")
{
    const ExpParams params = make_params(0, cplx{0.0, pi});
    const std::vector<cplx> path{cplx{1, 0}, cplx{-1, 0}};
    const WindingResult w = compute_winding(params, path);
    CHECK(w.eta == -1);
    CHECK(w.residual < 1e-10);

    // degenerate zero-length path
    const std::vector<cplx> still{cplx{0.3, 0.2}};
    CHECK(compute_winding(params, still).eta == 0);

    // closed-form endpoint expression for p = 0 at a closed-curve pair
    const cplx expect = params.lambda * (path[1] - path[0]) / cplx{0.0, two_pi};
    CHECK(std::lround(expect.real()) == w.eta);
}

TEST_CASE("winding is stable under path perturbation and refinement")
{
    const ExpParams e1 = make_params(1, cplx{0.4, 1.3});
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> jitter(-0.2, 0.2);
    const cplx a{1.0, 0.8};
    const cplx b{-1.3, -0.4};
    const WindingResult base =
        compute_winding(e1, marked_pair_path(a, b, 1), {.steps = 4096});
    const WindingResult fine =
        compute_winding(e1, marked_pair_path(a, b, 1), {.steps = 8192});
    CHECK(base.eta == fine.eta);

    for (int trial = 0; trial < 25; ++trial) {
        // interior vertices wiggle but stay away from 0
        std::vector<cplx> path{a};
        for (int k = 1; k <= 3; ++k) {
            const double t = k / 4.0;
            cplx mid = a + t * (b - a) + cplx{jitter(rng), jitter(rng)};
            if (std::abs(mid) < 0.05) mid += cplx{0.1, 0.1};
            path.push_back(mid);
        }
        path.push_back(b);
        CHECK(compute_winding(e1, path).eta == base.eta);
    }
}

TEST_CASE("pair path detours around the origin for p >= 1")
{
    const cplx a{-1.0, -1e-9};
    const cplx b{1.0, 1e-9};
    const auto path = marked_pair_path(a, b, 1);
    CHECK(path.size() > 2);
    for (std::size_t i = 1; i + 1 < path.size(); ++i)
        CHECK(std::abs(path[i]) >= 0.999e-6);
    // p = 0 keeps the straight segment (the integrand has no pole)
    CHECK(marked_pair_path(a, b, 0).size() == 2);
}

TEST_CASE("winding step count escalates until the residual resolves")
{
    // closed pentagram path winding twice around the pole: the exact
    // integral is 2p, but the five long chords need many subdivisions, so
    // the residual check forces doubling before it settles
    const ExpParams params = make_params(2, cplx{0.1, 0.2});
    std::vector<cplx> path;
    for (int k = 0; k <= 5; ++k) {
        const double th = two_pi * 2.0 * k / 5.0;
        path.push_back({std::cos(th), std::sin(th)});
    }
    WindingOptions opts;
    opts.steps = 8;  // residual stays above the limit until 32 subdivisions
    const WindingResult result = compute_winding(params, path, opts);
    CHECK(result.steps_used > 8);
    CHECK(result.residual <= 0.25);
    CHECK(result.eta == 4);  // winding 2, degree factor p = 2
}

TEST_CASE("a persistently non-integer winding raises branch tracking failure")
{
    // open image curve: lambda (z2 - z1) / 2 pi i = 1/2, so the residual
    // stays at one half no matter how fine the subdivision
    const ExpParams params = make_params(0, cplx{0.0, pi});
    const std::vector<cplx> path{cplx{0.0, 0.0}, cplx{1.0, 0.0}};
    WindingOptions opts;
    opts.steps = 8;
    opts.max_steps = 1 << 12;
    CHECK_THROWS_AS(compute_winding(params, path, opts), branch_tracking_error);
}

TEST_CASE("winding sum is identical on the serial and parallel paths")
{
    const ExpParams params = make_params(1, cplx{0.7, 1.1});
    const auto path = marked_pair_path(cplx{1.2, 0.4}, cplx{-0.8, -0.9}, 1);
    WindingOptions serial;
    serial.parallel = false;
    WindingOptions parallel;
    parallel.parallel = true;
    const WindingResult a = compute_winding(params, path, serial);
    const WindingResult b = compute_winding(params, path, parallel);
    CHECK(a.eta == b.eta);
    CHECK(a.residual == b.residual);
}

TEST_CASE("eta invariance check")
{
    IterationTrace trace;
    StepRecord step;
    step.eta = -1;
    trace.steps.assign(5, step);
    CHECK(check_eta_invariance(trace));

    trace.steps[3].eta = 0;
    CHECK(!check_eta_invariance(trace));

    trace.steps.resize(1);
    CHECK(check_eta_invariance(trace));
}

TEST_CASE("lambda bounds on a synthetic converged trace")
{
    const RunConfig config = parse_run_config(R"({"p":0,"orbit":["0","1","A","A"]})");
    IterationTrace trace;
    StepRecord step;
    step.n = 1;
    step.lambda = cplx{0.0, pi};
    step.eta = -1;
    step.pair_first = cplx{1.0, 0.0};
    step.pair_second = cplx{-1.0, 0.0};
    trace.steps.assign(3, step);
    trace.status = RunStatus::converged;

    const LambdaBoundsReport report = check_lambda_bounds(trace, config.portrait);
    CHECK(report.applicable);
    CHECK(report.holds);
    CHECK(report.kappa == 2.0);
    CHECK(report.tightest_ratio == doctest::Approx(1.0).epsilon(1e-12));

    // collision in the pair
    trace.steps[1].pair_second = trace.steps[1].pair_first;
    CHECK_THROWS_AS(check_lambda_bounds(trace, config.portrait),
                    bounded_geometry_error);

    // degenerate 3-point portraits are flagged not applicable
    const RunConfig degenerate =
        parse_run_config(R"({"p":0,"orbit":["0","1","1"],"address":{"1":1}})");
    const LambdaBoundsReport vacuous =
        check_lambda_bounds(trace, degenerate.portrait);
    CHECK(!vacuous.applicable);
}
