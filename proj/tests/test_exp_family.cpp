#include <doctest.h>

#include <random>

#include "spider/exp_family.hpp"

using namespace spider;

namespace {

const double pi = 3.14159265358979323846;

cplx random_nonzero(std::mt19937_64& rng, double lo = 0.2, double hi = 3.0)
{
    std::uniform_real_distribution<double> mag(lo, hi);
    std::uniform_real_distribution<double> ang(-pi, pi);
    const double r = mag(rng);
    const double th = ang(rng);
    return r * cplx{std::cos(th), std::sin(th)};
}

}  // namespace

TEST_CASE("alpha normalization")
{
    // p = 1 collapses to -lambda e for any lambda
    for (cplx lambda : {cplx{2.0, 0.0}, cplx{0.3, -1.1}, cplx{-0.5, 2.0}}) {
        const cplx expect = -lambda * std::exp(1.0);
        CHECK(std::abs(alpha_from_lambda(1, lambda) - expect) <=
              1e-14 * std::abs(expect));
    }
    CHECK(std::abs(alpha_from_lambda(1, cplx{-1.0, 0.0}) - std::exp(1.0)) < 1e-14);

    // p = 2, lambda = -2: the forward-evaluation oracle fixes alpha
    const ExpParams params = make_params(2, cplx{-2.0, 0.0});
    CHECK(std::abs(evaluate(params, params.crit) - 1.0) < 1e-12);
    CHECK(std::abs(params.alpha - std::exp(2.0)) < 1e-12);

    CHECK_THROWS_AS(alpha_from_lambda(1, cplx{}), invalid_parameter);
    CHECK_THROWS_AS(make_params(0, cplx{}), invalid_parameter);
}

TEST_CASE("evaluate basics")
{
    CHECK(evaluate(make_params(0, cplx{0.0, 1.0}), cplx{}) == cplx{1.0, 0.0});
    CHECK(std::abs(evaluate(make_params(0, cplx{0.0, pi}), cplx{1.0, 0.0}) -
                   cplx{-1.0, 0.0}) < 1e-15);

    // exact zero at the origin for p >= 1
    CHECK(evaluate(make_params(3, cplx{0.4, 0.7}), cplx{}) == cplx{});

    // escape is a distinguished value, not a crash
    const cplx far = evaluate(make_params(0, cplx{1.0, 0.0}), cplx{1000.0, 0.0});
    CHECK(escaped(far));
}

TEST_CASE("critical normalization E(crit) = 1 for randomized lambda")
{
    std::mt19937_64 rng(7);
    for (int p = 1; p <= 4; ++p) {
        for (int trial = 0; trial < 40; ++trial) {
            const ExpParams params = make_params(p, random_nonzero(rng));
            CHECK(std::abs(evaluate(params, params.crit) - 1.0) < 1e-10);
        }
    }
}

TEST_CASE("log_derivative")
{
    std::mt19937_64 rng(11);
    const cplx lambda{0.7, -0.3};
    const ExpParams e0 = make_params(0, lambda);
    for (int i = 0; i < 10; ++i)
        CHECK(log_derivative(e0, random_nonzero(rng)) == lambda);

    CHECK(std::abs(log_derivative(make_params(1, cplx{-1.0, 0.0}), cplx{1.0, 0.0})) <
          1e-15);

    // p = 2, lambda = pi i, z = 2i -> 1/i + pi i = (pi - 1) i
    const cplx got = log_derivative(make_params(2, cplx{0.0, pi}), cplx{0.0, 2.0});
    CHECK(std::abs(got - cplx{0.0, pi - 1.0}) < 1e-15);

    CHECK_THROWS_AS(log_derivative(make_params(2, cplx{1.0, 0.0}), cplx{}),
                    pole_error);
}

TEST_CASE("log_derivative agrees with central differences, O(h^2)")
{
    std::mt19937_64 rng(13);
    for (int p : {0, 1, 2}) {
        for (int trial = 0; trial < 20; ++trial) {
            const ExpParams params = make_params(p, random_nonzero(rng));
            const cplx z = random_nonzero(rng, 0.5, 2.0);
            auto diff_err = [&](double h) {
                const cplx num = (evaluate(params, z + h) - evaluate(params, z - h)) /
                                 (2.0 * h * evaluate(params, z));
                return std::abs(num - log_derivative(params, z));
            };
            const double e1 = diff_err(1e-4);
            const double e2 = diff_err(5e-5);
            // halving h must cut the error by about four
            CHECK(e2 <= e1 / 3.0 + 1e-12);
        }
    }
}

TEST_CASE("critical points")
{
    CHECK(critical_points(make_params(0, cplx{0.0, 2.0})).empty());

    const auto one = critical_points(make_params(1, cplx{-1.0, 0.0}));
    REQUIRE(one.size() == 1);
    CHECK(std::abs(one[0].first - cplx{1.0, 0.0}) < 1e-15);
    CHECK(one[0].second == 1);

    const auto three = critical_points(make_params(3, cplx{0.0, 1.0}));
    REQUIRE(three.size() == 2);
    CHECK(three[0].first == cplx{});
    CHECK(three[0].second == 2);
    CHECK(std::abs(three[1].first - cplx{0.0, 3.0}) < 1e-15);
    CHECK(three[1].second == 1);
}

TEST_CASE("inverse branch examples")
{
    CHECK(std::abs(inverse_branch(make_params(0, cplx{0.0, pi}), cplx{-1.0, 0.0}, 0) -
                   cplx{1.0, 0.0}) < 1e-15);
    CHECK(std::abs(inverse_branch(make_params(0, cplx{0.0, 2.0 * pi}), cplx{1.0, 0.0}, 1) -
                   cplx{1.0, 0.0}) < 1e-15);

    // p = 1: the critical preimage of 1, validated by forward evaluation
    const ExpParams p1 = make_params(1, cplx{-1.0, 0.0});
    const cplx z = inverse_branch(p1, cplx{1.0, 0.0}, 0);
    CHECK(std::abs(evaluate(p1, z) - 1.0) < 1e-12);
    CHECK(std::abs(z - cplx{1.0, 0.0}) < 1e-10);

    CHECK_THROWS_AS(inverse_branch(p1, cplx{}, 0), no_preimage_error);
}

TEST_CASE("inverse branch round trip")
{
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<long> sheet(-5, 5);
    for (int p : {0, 1, 2}) {
        for (int trial = 0; trial < 60; ++trial) {
            const ExpParams params = make_params(p, random_nonzero(rng, 0.4, 2.5));
            const cplx w = random_nonzero(rng, 0.3, 4.0);
            const long m = sheet(rng);
            const cplx z = inverse_branch(params, w, m);
            CHECK(std::abs(evaluate(params, z) - w) <= 1e-10 * std::abs(w));
        }
    }
}

TEST_CASE("branch separation for p = 0")
{
    std::mt19937_64 rng(19);
    for (int trial = 0; trial < 40; ++trial) {
        const ExpParams params = make_params(0, random_nonzero(rng));
        const cplx w = random_nonzero(rng, 0.3, 4.0);
        const long m1 = trial % 7 - 3;
        const long m2 = (trial * 5) % 11 - 5;
        const cplx gap = inverse_branch(params, w, m1) - inverse_branch(params, w, m2);
        const cplx expect =
            cplx{0.0, two_pi * static_cast<double>(m1 - m2)} / params.lambda;
        CHECK(std::abs(gap - expect) <= 1e-10 * (1.0 + std::abs(expect)));
    }
}

TEST_CASE("forward orbit")
{
    const auto euler = forward_orbit(make_params(0, cplx{0.0, pi}), cplx{}, 3);
    REQUIRE(euler.points.size() == 4);
    CHECK(!euler.escaped);
    CHECK(euler.points[0] == cplx{});
    CHECK(std::abs(euler.points[1] - cplx{1.0, 0.0}) < 1e-15);
    CHECK(std::abs(euler.points[2] - cplx{-1.0, 0.0}) < 1e-15);
    CHECK(std::abs(euler.points[3] - cplx{-1.0, 0.0}) < 1e-14);

    const auto degenerate = forward_orbit(make_params(0, cplx{0.0, two_pi}), cplx{}, 2);
    REQUIRE(degenerate.points.size() == 3);
    CHECK(std::abs(degenerate.points[2] - cplx{1.0, 0.0}) < 1e-14);

    const auto identity = forward_orbit(make_params(2, cplx{1.0, 1.0}), cplx{0.3, 0.1}, 0);
    CHECK(identity.points == std::vector<cplx>{cplx{0.3, 0.1}});

    const auto blown = forward_orbit(make_params(0, cplx{30.0, 0.0}), cplx{2.0, 0.0}, 5);
    CHECK(blown.escaped);
    CHECK(blown.points.size() < 6);
}
