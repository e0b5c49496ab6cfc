#include <doctest.h>

#include <cmath>

#include "spider/oracle.hpp"
#include "spider/pullback.hpp"

using namespace spider;

namespace {

const double pi = 3.14159265358979323846;

OrbitPortrait pi_portrait()
{
    return make_portrait(0, {"0", "1", "A", "A"});
}

}  // namespace

TEST_CASE("verify_orbit at the exact parameters")
{
    const OrbitPortrait portrait = pi_portrait();
    const OrbitVerification ok =
        verify_orbit(make_params(0, cplx{0.0, pi}), portrait, 1e-12);
    CHECK(ok.pass);
    CHECK(ok.closure_ok);
    CHECK(ok.separation_ok);
    CHECK(ok.pattern_ok);

    const OrbitVerification off =
        verify_orbit(make_params(0, cplx{0.01, pi}), portrait, 1e-12);
    CHECK(!off.closure_ok);
    CHECK(!off.pass);

    const OrbitPortrait degenerate = make_portrait(0, {"0", "1", "1"});
    CHECK(verify_orbit(make_params(0, cplx{0.0, two_pi}), degenerate, 1e-12).pass);
}

TEST_CASE("newton_direct_solve finds pi i from a nearby seed")
{
    const OrbitPortrait portrait = pi_portrait();
    const cplx lambda = newton_direct_solve(portrait, 0, cplx{0.0, 0.9 * pi});
    CHECK(std::abs(lambda - cplx{0.0, pi}) < 1e-10);
}

TEST_CASE("newton_direct_solve lands on the nearest degenerate parameter")
{
    const OrbitPortrait degenerate = make_portrait(0, {"0", "1", "1"});
    const cplx lambda = newton_direct_solve(degenerate, 0, cplx{0.0, 5.0});
    const double m = lambda.imag() / two_pi;
    CHECK(std::abs(m - std::round(m)) < 1e-10);
    CHECK(std::abs(lambda.real()) < 1e-10);
    CHECK(std::round(m) == 1.0);
}

TEST_CASE("superattracting 2-cycle: closure through the critical slot")
{
    const OrbitPortrait portrait = make_portrait(1, {"c", "1", "c"});

    // the collision root at lambda = -1 (critical point lands on 1) is
    // detected and rejected as the wrong basin
    try {
        newton_direct_solve(portrait, 1, cplx{-1.0, 0.0});
        FAIL("expected wrong_basin_error");
    } catch (const wrong_basin_error& e) {
        CHECK(std::abs(e.lambda - cplx{-1.0, 0.0}) < 1e-6);
    }

    // from a seed near a genuine 2-cycle parameter the solve lands on it
    // and the result satisfies E(1) = -1/lambda
    const cplx lambda = newton_direct_solve(portrait, 1, cplx{0.45, 0.0});
    const ExpParams params = make_params(1, lambda);
    CHECK(std::abs(evaluate(params, cplx{1.0, 0.0}) + 1.0 / lambda) < 1e-10);
    CHECK(verify_orbit(params, portrait, 1e-9).pass);
}

TEST_CASE("pullback and direct Newton agree")
{
    RunConfig config = parse_run_config(R"({
        "p": 0,
        "orbit": ["0", "1", "A", "A"],
        "address": {"1": 0, "A": -1},
        "seed_lambda": [0.0, 2.5132741228718345],
        "tolerances": {"tol": 1e-13}
    })");
    const MarkedConfiguration init =
        initial_configuration(config.portrait, *config.seed_lambda);
    IterationOptions opts;
    opts.tolerances = config.tolerances;
    opts.seed_lambda = config.seed_lambda;
    const IterationResult result =
        iterate(config.portrait, config.address, init, opts);
    REQUIRE(result.params.has_value());

    // seeded from the pullback answer, perturbed by 1e-3
    const cplx newton = newton_direct_solve(
        config.portrait, 0, result.params->lambda + cplx{1e-3, 1e-3});
    CHECK(std::abs(newton - result.params->lambda) <= 1e-8);
    CHECK(verify_orbit(*result.params, config.portrait, 1e-9).pass);
}

TEST_CASE("escaping seeds are rejected")
{
    CHECK_THROWS_AS(newton_direct_solve(pi_portrait(), 0, cplx{40.0, 0.0}),
                    seed_rejected_error);
    CHECK_THROWS_AS(newton_direct_solve(pi_portrait(), 0, cplx{}),
                    invalid_parameter);
    CHECK_THROWS_AS(newton_direct_solve(pi_portrait(), 1, cplx{1.0, 0.0}),
                    invalid_parameter);
}
