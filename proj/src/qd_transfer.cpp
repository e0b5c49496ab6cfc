#include "spider/qd_transfer.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>

namespace spider {

cplx QuadDifferential::eval(cplx z) const
{
    cplx sum{};
    for (std::size_t j = 0; j < poles.size(); ++j) sum += residues[j] / (z - poles[j]);
    return sum;
}

bool QuadDifferential::is_zero() const
{
    return std::all_of(residues.begin(), residues.end(),
                       [](cplx a) { return a == cplx{}; });
}

namespace {

// Rank of a complex matrix (rows x cols) by Gaussian elimination.
std::size_t matrix_rank(std::vector<std::vector<cplx>> m)
{
    std::size_t rank = 0;
    const std::size_t rows = m.size();
    if (rows == 0) return 0;
    const std::size_t cols = m.front().size();
    for (std::size_t col = 0; col < cols && rank < rows; ++col) {
        std::size_t pivot = rank;
        for (std::size_t r = rank + 1; r < rows; ++r)
            if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
        if (std::abs(m[pivot][col]) < 1e-12) continue;
        std::swap(m[rank], m[pivot]);
        for (std::size_t r = rank + 1; r < rows; ++r) {
            const cplx f = m[r][col] / m[rank][col];
            for (std::size_t cc = col; cc < cols; ++cc) m[r][cc] -= f * m[rank][cc];
        }
        ++rank;
    }
    return rank;
}

}  // namespace

std::vector<QuadDifferential> qd_basis(std::span<const cplx> marked_finite)
{
    const std::size_t K = marked_finite.size();
    std::vector<QuadDifferential> basis;
    if (K < 3) return basis;

    for (std::size_t i = 0; i < K; ++i)
        for (std::size_t k = i + 1; k < K; ++k)
            if (marked_finite[i] == marked_finite[k])
                throw invalid_parameter("qd_basis: marked points must be distinct");

    const cplx p0 = marked_finite[0];
    const cplx p1 = marked_finite[1];
    for (std::size_t i = 2; i < K; ++i) {
        // a_i = 1; solve a_0 + a_1 = -1 and a_0 p0 + a_1 p1 = -p_i.
        QuadDifferential q;
        q.poles.assign(marked_finite.begin(), marked_finite.end());
        q.residues.assign(K, cplx{});
        const cplx pi = marked_finite[i];
        const cplx a0 = (p1 - pi) / (p0 - p1);
        q.residues[0] = a0;
        q.residues[1] = -1.0 - a0;
        q.residues[i] = cplx{1.0, 0.0};
        basis.push_back(std::move(q));
    }

    std::vector<std::vector<cplx>> residue_matrix;
    for (const auto& q : basis) residue_matrix.push_back(q.residues);
    if (matrix_rank(std::move(residue_matrix)) != basis.size())
        throw invalid_parameter("qd_basis: residue matrix is rank deficient");
    return basis;
}

namespace {

quad::PlaneGridConfig grid_config(const TransferOptions& opts, double radius)
{
    quad::PlaneGridConfig cfg;
    cfg.outer_radius = radius;
    cfg.radial_cells = opts.grid;
    cfg.angular_cells = std::max<std::size_t>(8, (opts.grid * 2) / 3);
    cfg.pole_radial_cells = std::max<std::size_t>(8, opts.grid / 3);
    cfg.pole_angular_cells = std::max<std::size_t>(8, opts.grid / 2);
    cfg.parallel = opts.parallel;
    return cfg;
}

double marked_scale(std::span<const cplx> points)
{
    double scale = 1.0;
    for (const cplx p : points) scale = std::max(scale, std::abs(p));
    return scale;
}

// Preimages of z with sheet indices |m| <= M, each paired with
// 1/E'(w)^2 = 1/(z (p/w + lambda))^2.  The ladder is seeded by first-order
// continuation in m, so the p >= 1 Newton solves stay cheap.  For p >= 1
// the p root sheets near the origin are appended (forward Newton from the
// p-th roots of z/alpha), deduplicated against the ladder.
struct Preimage {
    cplx w;
    cplx inv_dE2;
};

std::vector<Preimage> preimage_list(const ExpParams& params, cplx z, int M)
{
    std::vector<Preimage> list;
    list.reserve(2 * static_cast<std::size_t>(M) + 1 + params.p);
    const cplx lz2 = cpow_int(params.lambda * z, 2);

    if (params.p == 0) {
        // Ordered m = 0, +1..+M, -1..-M so the outermost sheets sit at
        // indices M and 2M, as in the p >= 1 ladder below.
        const cplx base = principal_log(z) / params.lambda;
        const cplx shift = cplx{0.0, two_pi} / params.lambda;
        list.push_back({base, 1.0 / lz2});
        for (long m = 1; m <= M; ++m)
            list.push_back({base + static_cast<double>(m) * shift, 1.0 / lz2});
        for (long m = -1; m >= -M; --m)
            list.push_back({base + static_cast<double>(m) * shift, 1.0 / lz2});
        return list;
    }

    const double pd = static_cast<double>(params.p);
    auto weight = [&](cplx w) {
        const cplx d = pd / w + params.lambda;
        return 1.0 / cpow_int(z * d, 2);
    };

    auto solve_ladder = [&](long m, std::optional<cplx> seed) {
        try {
            return inverse_branch(params, z, m, seed);
        } catch (const nonconvergence_error& e) {
            throw nonconvergence_error("pushforward: branch " + std::to_string(m) +
                                           ": " + e.what(),
                                       e.last_iterate);
        }
    };
    auto continuation_seed = [&](cplx w) {
        const cplx d = pd / w + params.lambda;
        return w + cplx{0.0, two_pi} / d;
    };

    const cplx w0 = solve_ladder(0, std::nullopt);
    list.push_back({w0, weight(w0)});
    cplx up = w0;
    for (long m = 1; m <= M; ++m) {
        up = solve_ladder(m, continuation_seed(up));
        list.push_back({up, weight(up)});
    }
    cplx down = w0;
    for (long m = -1; m >= -M; --m) {
        down = solve_ladder(m, continuation_seed(down));
        list.push_back({down, weight(down)});
    }

    // Root sheets: forward Newton from the p-th roots of z/alpha.
    for (int k = 0; k < params.p; ++k) {
        cplx w = std::exp((principal_log(z / params.alpha) +
                           cplx{0.0, two_pi * static_cast<double>(k)}) /
                          pd);
        bool ok = false;
        for (int iter = 0; iter < 64; ++iter) {
            const cplx f = evaluate(params, w) - z;
            if (escaped(f)) break;
            if (std::abs(f) <= 1e-12 * (1.0 + std::abs(z))) {
                ok = true;
                break;
            }
            const cplx df = evaluate(params, w) * (pd / w + params.lambda);
            if (df == cplx{} || escaped(df)) break;
            w -= f / df;
            if (w == cplx{}) break;
        }
        if (!ok) continue;
        const bool dup = std::any_of(list.begin(), list.end(), [&](const Preimage& q) {
            return std::abs(q.w - w) <= 1e-9 * (1.0 + std::abs(w));
        });
        if (!dup) list.push_back({w, weight(w)});
    }
    return list;
}

double ladder_tail_bound(const QuadDifferential& q,
                         const std::vector<Preimage>& list, int M)
{
    // |terms| fall off at least like 1/m^2; calibrate on the outermost
    // computed sheets and compare with sum_{m>M} 1/m^2 <= 1/M.
    const double Md = static_cast<double>(M);
    double coeff = 0.0;
    auto term_at = [&](std::size_t idx) {
        return std::abs(q.eval(list[idx].w) * list[idx].inv_dE2);
    };
    if (list.size() >= 2 * static_cast<std::size_t>(M) + 1) {
        coeff = std::max(term_at(static_cast<std::size_t>(M)) * Md * Md,
                         term_at(2 * static_cast<std::size_t>(M)) * Md * Md);
    }
    return 2.0 * coeff / Md;
}

}  // namespace

NormResult qd_norm(const QuadDifferential& q, const TransferOptions& opts)
{
    NormResult result;
    if (q.is_zero() || q.poles.empty()) return result;

    const double radius = opts.outer_radius > 0.0
                              ? opts.outer_radius
                              : 10.0 * marked_scale(q.poles);
    const auto cfg = grid_config(opts, radius);
    const std::size_t K = q.poles.size();
    const std::vector<std::vector<cplx>> combos{q.residues};
    const auto integrals = quad::integrate_abs_combos(
        [&](cplx z, std::span<cplx> out) {
            for (std::size_t j = 0; j < K; ++j) out[j] = 1.0 / (z - q.poles[j]);
        },
        K, combos, q.poles, cfg);
    result.value = integrals[0].value;
    result.error_estimate = integrals[0].error_estimate;
    result.tail = integrals[0].tail;
    return result;
}

PushforwardValue pushforward_values(const ExpParams& params,
                                    const QuadDifferential& q, cplx z, int M)
{
    if (M < 1) throw invalid_parameter("pushforward_values: M must be >= 1");
    if (z == cplx{})
        throw invalid_parameter("pushforward_values: z = 0 has no preimages");
    if (params.p >= 1 && std::abs(z - cplx{1.0, 0.0}) < 1e-4)
        throw invalid_parameter(
            "pushforward_values: z within the excluded disk at the critical value");

    PushforwardValue out;
    if (q.is_zero()) return out;
    const auto list = preimage_list(params, z, M);
    cplx sum{};
    for (const Preimage& pre : list) sum += q.eval(pre.w) * pre.inv_dE2;
    out.value = sum;
    out.tail_bound = ladder_tail_bound(q, list, M);
    return out;
}

ContractionReport contraction_estimate(const ExpParams& params,
                                       std::span<const cplx> marked_finite,
                                       const TransferOptions& opts)
{
    if (opts.branches < 1)
        throw invalid_parameter("contraction_estimate: branch truncation must be >= 1");

    ContractionReport report;
    report.branches = opts.branches;
    report.grid = opts.grid;

    const auto basis = qd_basis(marked_finite);
    report.basis_size = static_cast<int>(basis.size());
    if (basis.empty()) return report;

    const std::size_t K = marked_finite.size();
    const std::size_t dim = basis.size();

    // Candidate residue vectors: the basis plus random unit-norm
    // combinations (deterministic generator).
    std::vector<std::vector<cplx>> candidates;
    std::vector<std::string> kinds;
    for (const auto& b : basis) {
        candidates.push_back(b.residues);
        kinds.push_back("basis");
    }
    std::mt19937_64 rng(opts.rng_seed);
    auto uniform = [&]() {
        return static_cast<double>(rng() >> 11) * 0x1.0p-53;
    };
    for (int r = 0; r < opts.random_combos; ++r) {
        std::vector<cplx> coeff(dim);
        double norm2 = 0.0;
        for (auto& c : coeff) {
            // Box-Muller pair
            const double u1 = std::max(uniform(), 1e-300);
            const double u2 = uniform();
            const double radius = std::sqrt(-2.0 * std::log(u1));
            c = radius * cplx{std::cos(two_pi * u2), std::sin(two_pi * u2)};
            norm2 += std::norm(c);
        }
        std::vector<cplx> residues(K, cplx{});
        for (std::size_t i = 0; i < dim; ++i)
            for (std::size_t j = 0; j < K; ++j)
                residues[j] += coeff[i] / std::sqrt(norm2) * basis[i].residues[j];
        candidates.push_back(std::move(residues));
        kinds.push_back("random");
    }
    const std::size_t C = candidates.size();

    // Denominators ||q||: rational pole kernels, one pass for all combos.
    const double scale = marked_scale(marked_finite);
    const double radius_q =
        opts.outer_radius > 0.0 ? opts.outer_radius : 10.0 * scale;
    const auto denom = quad::integrate_abs_combos(
        [&](cplx z, std::span<cplx> out) {
            for (std::size_t j = 0; j < K; ++j) out[j] = 1.0 / (z - marked_finite[j]);
        },
        K, candidates, std::vector<cplx>(marked_finite.begin(), marked_finite.end()),
        grid_config(opts, radius_q));

    // Numerators ||E_* q||: pushed pole kernels S_j plus truncation-tail
    // densities T_j, both filled from one preimage list per node.  The
    // pushforward has simple poles at the images E(p_j); near z = 0 the
    // truncated sum cannot resolve the cancellation that produces the
    // simple pole there, so a disk at 0 is excluded from the grid and its
    // contribution added from the c0/z model sampled on the circle.
    std::vector<cplx> singulars;
    for (const cplx p : marked_finite) {
        const cplx image = evaluate(params, p);
        const bool dup = std::any_of(singulars.begin(), singulars.end(), [&](cplx s) {
            return std::abs(s - image) < 1e-9;
        });
        if (!dup && !escaped(image)) singulars.push_back(image);
    }
    if (params.p >= 1) {
        const bool dup = std::any_of(singulars.begin(), singulars.end(), [&](cplx s) {
            return std::abs(s - cplx{1.0, 0.0}) < 1e-9;
        });
        if (!dup) singulars.push_back(cplx{1.0, 0.0});
    }

    double min_singular_abs = std::numeric_limits<double>::infinity();
    double push_scale = std::max(std::abs(params.lambda), scale);
    for (const cplx s : singulars) {
        push_scale = std::max(push_scale, std::abs(s));
        min_singular_abs = std::min(min_singular_abs, std::abs(s));
    }
    const double radius_push =
        opts.outer_radius > 0.0 ? opts.outer_radius : 10.0 * push_scale;
    const double zero_disk = std::max(
        1e-3, std::min({0.1 * push_scale, 0.45 * min_singular_abs}));
    const std::vector<quad::Exclusion> exclusions{{cplx{}, zero_disk}};

    // Kernel blocks: pushed pole kernels S_j, then the outermost ladder
    // terms on the +M and -M sides.  The truncated branches of a combined
    // differential fall off like m^-3 only after the residue cancellation,
    // so the tail must be bounded per candidate:
    //   sum_{|m|>M} |term_m| <= M (|term_{+M}| + |term_{-M}|),
    // and the outermost terms are linear in the residues.
    const int M = opts.branches;
    const double Md = static_cast<double>(M);
    std::vector<std::vector<cplx>> push_combos(3 * C,
                                               std::vector<cplx>(3 * K, cplx{}));
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t j = 0; j < K; ++j) {
            push_combos[c][j] = candidates[c][j];
            push_combos[C + c][K + j] = Md * candidates[c][j];
            push_combos[2 * C + c][2 * K + j] = Md * candidates[c][j];
        }

    // Squared ladder offsets, shared read-only across threads.
    std::vector<cplx> ladder_sq(static_cast<std::size_t>(M) + 1);
    const cplx ladder_shift = cplx{0.0, two_pi} / params.lambda;
    for (long m = 0; m <= M; ++m)
        ladder_sq[static_cast<std::size_t>(m)] =
            cpow_int(static_cast<double>(m) * ladder_shift, 2);

    auto push_kernels = [&](cplx z, std::span<cplx> out) {
        if (z == cplx{}) {
            for (std::size_t j = 0; j < 3 * K; ++j) out[j] = cplx{};
            return;
        }
        if (params.p == 0) {
            // Allocation-free ladder: the preimages form an arithmetic
            // progression, and symmetric sheets pair up as
            // 1/(x + m h) + 1/(x - m h) = 2x / (x^2 - m^2 h^2).
            const cplx base = principal_log(z) / params.lambda;
            const cplx inv = 1.0 / cpow_int(params.lambda * z, 2);
            const cplx mh = static_cast<double>(M) * ladder_shift;
            for (std::size_t j = 0; j < K; ++j) {
                const cplx x = base - marked_finite[j];
                const cplx x2 = x * x;
                cplx sum = 1.0 / x;
                for (long m = 1; m <= M; ++m)
                    sum += 2.0 * x / (x2 - ladder_sq[static_cast<std::size_t>(m)]);
                out[j] = sum * inv;
                out[K + j] = inv / (x + mh);
                out[2 * K + j] = inv / (x - mh);
            }
            return;
        }
        const auto list = preimage_list(params, z, M);
        const bool full_ladder = list.size() >= 2 * static_cast<std::size_t>(M) + 1;
        for (std::size_t j = 0; j < K; ++j) {
            cplx sum{};
            for (const Preimage& pre : list)
                sum += pre.inv_dE2 / (pre.w - marked_finite[j]);
            out[j] = sum;
            const auto term = [&](std::size_t idx) {
                return list[idx].inv_dE2 / (list[idx].w - marked_finite[j]);
            };
            out[K + j] = full_ladder ? term(static_cast<std::size_t>(M)) : cplx{};
            out[2 * K + j] =
                full_ladder ? term(2 * static_cast<std::size_t>(M)) : cplx{};
        }
    };

    const auto push =
        quad::integrate_abs_combos(push_kernels, 3 * K, push_combos, singulars,
                                   grid_config(opts, radius_push), exclusions);

    // Inner-disk contribution: |phi_hat| = |c0|/|z| + O(1), sampled on the
    // circle |z| = zero_disk.
    const std::size_t inner_samples = 128;
    std::vector<double> inner_mean(C, 0.0), inner_min(C, 1e300), inner_max(C, 0.0);
    {
        std::vector<cplx> values(3 * K);
        for (std::size_t s = 0; s < inner_samples; ++s) {
            const double th = two_pi * (static_cast<double>(s) + 0.5) /
                              static_cast<double>(inner_samples);
            const cplx z = zero_disk * cplx{std::cos(th), std::sin(th)};
            push_kernels(z, values);
            for (std::size_t c = 0; c < C; ++c) {
                cplx sum{};
                for (std::size_t j = 0; j < K; ++j) sum += candidates[c][j] * values[j];
                const double v = std::abs(sum * z);
                inner_mean[c] += v / static_cast<double>(inner_samples);
                inner_min[c] = std::min(inner_min[c], v);
                inner_max[c] = std::max(inner_max[c], v);
            }
        }
    }

    for (std::size_t c = 0; c < C; ++c) {
        ContractionRow row;
        row.kind = kinds[c];
        row.index = static_cast<int>(c < dim ? c : c - dim);
        row.denominator = denom[c].value;
        const double inner = two_pi * zero_disk * inner_mean[c];
        const double inner_err = two_pi * zero_disk * (inner_max[c] - inner_min[c]);
        row.numerator = push[c].value + inner;
        if (row.denominator <= 0.0) continue;  // zero differential: undefined ratio
        row.ratio = row.numerator / row.denominator;

        const double trunc_tail = push[C + c].value + push[2 * C + c].value;
        // Quadrature refinement gaps, the truncated branches, the inner
        // disk's angular spread, and a 30% haircut of the analytic tails.
        row.error_bound =
            (push[c].error_estimate + trunc_tail + inner_err + 0.3 * push[c].tail +
             row.ratio * (denom[c].error_estimate + 0.3 * denom[c].tail)) /
            row.denominator;

        report.max_ratio = std::max(report.max_ratio, row.ratio);
        report.max_error_bound = std::max(report.max_error_bound, row.error_bound);
        report.rows.push_back(std::move(row));
    }
    report.delta = report.rows.empty() ? 0.0 : 1.0 - report.max_ratio;
    return report;
}

}  // namespace spider
