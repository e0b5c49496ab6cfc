#include <doctest.h>

#include <cmath>
#include <random>

#include "spider/qd_transfer.hpp"

using namespace spider;

namespace {

const double pi = 3.14159265358979323846;

const std::vector<cplx> kMarked{cplx{0, 0}, cplx{1, 0}, cplx{-1, 0}};

// Closed form of the full (untruncated) transfer sum for p = 0:
//   (L phi)(z) = (1 / (lambda z^2)) sum_j a_j (1/2) coth((Log z - lambda p_j)/2),
// an independent route for checking the truncated branch sum.
cplx pushforward_exact(const ExpParams& params, const QuadDifferential& q, cplx z)
{
    cplx sum{};
    for (std::size_t j = 0; j < q.poles.size(); ++j) {
        const cplx arg = 0.5 * (principal_log(z) - params.lambda * q.poles[j]);
        sum += q.residues[j] * 0.5 / std::tanh(arg);
    }
    return sum / (params.lambda * z * z);
}

TransferOptions fast_options(std::size_t grid = 128, int branches = 64)
{
    TransferOptions opts;
    opts.grid = grid;
    opts.branches = branches;
    return opts;
}

}  // namespace

TEST_CASE("basis dimension and constraints")
{
    CHECK(qd_basis(std::vector<cplx>{cplx{0, 0}, cplx{1, 0}}).empty());

    const auto one = qd_basis(kMarked);
    REQUIRE(one.size() == 1);
    CHECK(std::abs(one[0].residues[0] - cplx{-2.0, 0.0}) < 1e-14);
    CHECK(std::abs(one[0].residues[1] - cplx{1.0, 0.0}) < 1e-14);
    CHECK(std::abs(one[0].residues[2] - cplx{1.0, 0.0}) < 1e-14);

    const auto two =
        qd_basis(std::vector<cplx>{cplx{0, 0}, cplx{1, 0}, cplx{-1, 0}, cplx{0, 2}});
    CHECK(two.size() == 2);

    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> coord(-3.0, 3.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<cplx> points;
        const int K = 3 + trial % 5;
        for (int i = 0; i < K; ++i) points.push_back({coord(rng), coord(rng)});
        bool distinct = true;
        for (std::size_t i = 0; i < points.size() && distinct; ++i)
            for (std::size_t k = i + 1; k < points.size(); ++k)
                if (std::abs(points[i] - points[k]) < 1e-6) distinct = false;
        if (!distinct) continue;

        const auto basis = qd_basis(points);
        CHECK(basis.size() == points.size() - 2);  // (m - 3) with infinity counted
        for (const auto& q : basis) {
            cplx sum{}, moment{};
            for (std::size_t j = 0; j < q.poles.size(); ++j) {
                sum += q.residues[j];
                moment += q.residues[j] * q.poles[j];
            }
            CHECK(std::abs(sum) <= 1e-14);
            CHECK(std::abs(moment) <= 1e-14);
        }
    }
}

TEST_CASE("norm basics")
{
    QuadDifferential zero;
    zero.poles = kMarked;
    zero.residues = {cplx{}, cplx{}, cplx{}};
    CHECK(qd_norm(zero).value == 0.0);

    const auto basis = qd_basis(kMarked);
    const NormResult base = qd_norm(basis[0], fast_options(256));
    CHECK(base.value > 0.0);

    QuadDifferential doubled = basis[0];
    for (auto& a : doubled.residues) a *= 2.0;
    const NormResult twice = qd_norm(doubled, fast_options(256));
    CHECK(std::abs(twice.value - 2.0 * base.value) <=
          2.0 * (base.error_estimate + 1e-3 * base.value));

    // stable under refinement to better than 1%
    const NormResult fine = qd_norm(basis[0], fast_options(512));
    CHECK(std::abs(fine.value - base.value) < 0.01 * fine.value);
}

TEST_CASE("pushforward values: linearity, truncation, closed form")
{
    const ExpParams params = make_params(0, cplx{0.0, pi});
    const auto basis = qd_basis(kMarked);
    const QuadDifferential& q = basis[0];

    QuadDifferential zero = q;
    zero.residues = {cplx{}, cplx{}, cplx{}};
    CHECK(pushforward_values(params, zero, cplx{0.7, 0.4}, 32).value == cplx{});

    for (cplx z : {cplx{0.3, 0.7}, cplx{-2.5, 1.1}, cplx{5.0, -3.0}, cplx{0.1, -0.2}}) {
        const PushforwardValue coarse = pushforward_values(params, q, z, 64);
        const PushforwardValue fine = pushforward_values(params, q, z, 128);
        CHECK(std::abs(coarse.value - fine.value) <= coarse.tail_bound);
        CHECK(std::abs(fine.value - pushforward_exact(params, q, z)) <=
              fine.tail_bound + 1e-12);
    }

    // linearity across two differentials on a richer marked set
    const std::vector<cplx> marked4{cplx{0, 0}, cplx{1, 0}, cplx{-1, 0}, cplx{0, 2}};
    const auto basis4 = qd_basis(marked4);
    QuadDifferential combo = basis4[0];
    for (std::size_t j = 0; j < combo.residues.size(); ++j)
        combo.residues[j] += basis4[1].residues[j];
    const cplx z{1.3, 0.8};
    const cplx lhs = pushforward_values(params, combo, z, 64).value;
    const cplx rhs = pushforward_values(params, basis4[0], z, 64).value +
                     pushforward_values(params, basis4[1], z, 64).value;
    CHECK(std::abs(lhs - rhs) < 1e-10);

    CHECK_THROWS_AS(pushforward_values(params, q, cplx{}, 32), invalid_parameter);
}

TEST_CASE("pushforward closed-form oracle across random parameters")
{
    std::mt19937_64 rng(43);
    std::uniform_real_distribution<double> re(-1.5, 1.5);
    std::uniform_real_distribution<double> im(0.5, 2.5);
    for (int trial = 0; trial < 10; ++trial) {
        const ExpParams params = make_params(0, cplx{re(rng), im(rng)});
        const auto basis = qd_basis(kMarked);
        const cplx z{re(rng) + 2.0, re(rng)};
        const PushforwardValue got = pushforward_values(params, basis[0], z, 128);
        CHECK(std::abs(got.value - pushforward_exact(params, basis[0], z)) <=
              got.tail_bound + 1e-10);
    }
}

TEST_CASE("pushforward for p = 1 is consistent under refinement")
{
    const ExpParams params = make_params(1, cplx{-3.512862417253, 0.0});
    const std::vector<cplx> marked{params.crit, cplx{1, 0}, cplx{0.3, 0.4}};
    const auto basis = qd_basis(marked);
    const cplx z{0.8, 0.9};
    const PushforwardValue coarse = pushforward_values(params, basis[0], z, 24);
    const PushforwardValue fine = pushforward_values(params, basis[0], z, 48);
    CHECK(std::abs(coarse.value - fine.value) <=
          coarse.tail_bound + 1e-6 * std::abs(coarse.value));

    CHECK_THROWS_AS(pushforward_values(params, basis[0], cplx{1.0 + 1e-5, 0.0}, 16),
                    invalid_parameter);
}

TEST_CASE("contraction at the realized map")
{
    const ExpParams params = make_params(0, cplx{0.0, pi});
    TransferOptions opts = fast_options(160, 96);
    const ContractionReport report = contraction_estimate(params, kMarked, opts);
    REQUIRE(report.basis_size == 1);
    REQUIRE(report.rows.size() == static_cast<std::size_t>(1 + opts.random_combos));
    for (const ContractionRow& row : report.rows) {
        // weak contraction with numerical slack, strict at the estimate
        CHECK(row.numerator <= row.denominator * (1.0 + row.error_bound));
        CHECK(row.ratio < 1.0);
    }
    CHECK(report.delta > 0.0);
    CHECK(report.max_error_bound < report.delta);
}

TEST_CASE("contraction with a two-dimensional basis")
{
    // realized 0 -> 1 -> a -> b -> a map: five marked points with
    // infinity, so the random combinations genuinely mix basis elements
    const ExpParams params =
        make_params(0, cplx{0.92362187977855, 3.39098415768017});
    const cplx a = evaluate(params, cplx{1.0, 0.0});
    const cplx b = evaluate(params, a);
    const std::vector<cplx> marked{cplx{0, 0}, cplx{1, 0}, a, b};

    TransferOptions opts = fast_options(128, 64);
    const ContractionReport report = contraction_estimate(params, marked, opts);
    REQUIRE(report.basis_size == 2);
    REQUIRE(report.rows.size() == static_cast<std::size_t>(2 + opts.random_combos));
    for (const ContractionRow& row : report.rows) CHECK(row.ratio < 1.0);
    CHECK(report.delta > 0.0);
}

TEST_CASE("degenerate marked set gives the empty report")
{
    const ExpParams params = make_params(0, cplx{0.0, two_pi});
    const std::vector<cplx> marked{cplx{0, 0}, cplx{1, 0}};
    const ContractionReport report =
        contraction_estimate(params, marked, fast_options(64, 16));
    CHECK(report.basis_size == 0);
    CHECK(report.rows.empty());

    CHECK_THROWS_AS(contraction_estimate(params, marked, TransferOptions{.branches = 0}),
                    invalid_parameter);
}

TEST_CASE("parallel kernels match the serial reference bit for bit")
{
    const ExpParams params = make_params(0, cplx{0.0, pi});
    TransferOptions serial = fast_options(96, 32);
    serial.parallel = false;
    TransferOptions parallel = serial;
    parallel.parallel = true;

    const ContractionReport a = contraction_estimate(params, kMarked, serial);
    const ContractionReport b = contraction_estimate(params, kMarked, parallel);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(a.rows[i].numerator == b.rows[i].numerator);
        CHECK(a.rows[i].denominator == b.rows[i].denominator);
        CHECK(a.rows[i].ratio == b.rows[i].ratio);
    }

    const auto basis = qd_basis(kMarked);
    TransferOptions nserial = fast_options(128);
    nserial.parallel = false;
    TransferOptions nparallel = nserial;
    nparallel.parallel = true;
    CHECK(qd_norm(basis[0], nserial).value == qd_norm(basis[0], nparallel).value);
}
