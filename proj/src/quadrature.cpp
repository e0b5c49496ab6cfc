#include "spider/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace spider::quad {

namespace {

struct GridNode {
    cplx z;
    double weight;
};

double subgrid_radius(std::span<const cplx> singulars, double outer_radius)
{
    double sep = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < singulars.size(); ++i)
        for (std::size_t k = i + 1; k < singulars.size(); ++k)
            sep = std::min(sep, std::abs(singulars[i] - singulars[k]));
    double r0 = std::isfinite(sep) ? 0.5 * sep : 1.0;
    return std::min(r0, outer_radius / 10.0);
}

// All quadrature nodes at the given resolution divisor (1 = full, 2 =
// halved).  Node order is fixed; the reduction below is chunked over it.
std::vector<GridNode> build_nodes(std::span<const cplx> singulars,
                                  std::span<const Exclusion> exclusions,
                                  const PlaneGridConfig& cfg, std::size_t divisor)
{
    std::vector<GridNode> nodes;
    const double r0 = subgrid_radius(singulars, cfg.outer_radius);
    const std::size_t pr = std::max<std::size_t>(4, cfg.pole_radial_cells / divisor);
    const std::size_t pa = std::max<std::size_t>(8, cfg.pole_angular_cells / divisor);
    const std::size_t gr = std::max<std::size_t>(8, cfg.radial_cells / divisor);
    const std::size_t ga = std::max<std::size_t>(8, cfg.angular_cells / divisor);
    nodes.reserve(singulars.size() * pr * pa + gr * ga);

    auto excluded = [&](cplx z) {
        for (const Exclusion& e : exclusions)
            if (std::abs(z - e.center) < e.radius) return true;
        return false;
    };

    // Polar subgrid around each singular point; the rho Jacobian tames
    // the integrable 1/|z - s| singularity.
    for (const cplx s : singulars) {
        const double dr = r0 / static_cast<double>(pr);
        const double dth = two_pi / static_cast<double>(pa);
        for (std::size_t a = 0; a < pr; ++a) {
            const double rho = (static_cast<double>(a) + 0.5) * dr;
            for (std::size_t b = 0; b < pa; ++b) {
                const double th = (static_cast<double>(b) + 0.5) * dth;
                const cplx z = s + rho * cplx{std::cos(th), std::sin(th)};
                if (!excluded(z)) nodes.push_back({z, rho * dr * dth});
            }
        }
    }

    // Global polar grid with the subgrid disks cut out.
    const double dr = cfg.outer_radius / static_cast<double>(gr);
    const double dth = two_pi / static_cast<double>(ga);
    for (std::size_t a = 0; a < gr; ++a) {
        const double rho = (static_cast<double>(a) + 0.5) * dr;
        for (std::size_t b = 0; b < ga; ++b) {
            const double th = (static_cast<double>(b) + 0.5) * dth;
            const cplx z = rho * cplx{std::cos(th), std::sin(th)};
            bool inside = excluded(z);
            for (const cplx s : singulars) {
                if (inside) break;
                if (std::abs(z - s) < r0) inside = true;
            }
            if (!inside) nodes.push_back({z, rho * dr * dth});
        }
    }
    return nodes;
}

std::vector<double> accumulate_combos(const KernelFn& kernels,
                                      std::size_t kernel_count,
                                      std::span<const std::vector<cplx>> combos,
                                      const std::vector<GridNode>& nodes,
                                      bool parallel)
{
    const std::size_t C = combos.size();
    constexpr std::size_t chunk_size = 2048;
    const std::size_t chunks = (nodes.size() + chunk_size - 1) / chunk_size;
    std::vector<double> partials(chunks * C, 0.0);

#if defined(_OPENMP)
#pragma omp parallel for schedule(static) if (parallel)
#endif
    for (long long c = 0; c < static_cast<long long>(chunks); ++c) {
        std::vector<cplx> values(kernel_count);
        std::vector<double> local(C, 0.0);
        const std::size_t begin = static_cast<std::size_t>(c) * chunk_size;
        const std::size_t end = std::min(begin + chunk_size, nodes.size());
        for (std::size_t i = begin; i < end; ++i) {
            kernels(nodes[i].z, values);
            for (std::size_t k = 0; k < C; ++k) {
                cplx sum{};
                const auto& coeff = combos[k];
                for (std::size_t j = 0; j < kernel_count; ++j)
                    sum += coeff[j] * values[j];
                local[k] += std::abs(sum) * nodes[i].weight;
            }
        }
        for (std::size_t k = 0; k < C; ++k)
            partials[static_cast<std::size_t>(c) * C + k] = local[k];
    }

    std::vector<double> totals(C, 0.0);
    for (std::size_t c = 0; c < chunks; ++c)
        for (std::size_t k = 0; k < C; ++k)
            totals[k] += partials[c * C + k];
    return totals;
}

}  // namespace

std::vector<PlaneIntegral> integrate_abs_combos(
    const KernelFn& kernels, std::size_t kernel_count,
    std::span<const std::vector<cplx>> combos,
    std::span<const cplx> singular_points, const PlaneGridConfig& cfg,
    std::span<const Exclusion> exclusions)
{
    for (const auto& combo : combos)
        if (combo.size() != kernel_count)
            throw quadrature_error("integrate_abs_combos: combo size mismatch");

    const auto nodes_full = build_nodes(singular_points, exclusions, cfg, 1);
    const auto nodes_half = build_nodes(singular_points, exclusions, cfg, 2);
    const auto full =
        accumulate_combos(kernels, kernel_count, combos, nodes_full, cfg.parallel);
    const auto half =
        accumulate_combos(kernels, kernel_count, combos, nodes_half, cfg.parallel);

    // Tail: |f| <= C |z|^-3 beyond R, with C calibrated on the circle |z| = R.
    const std::size_t C = combos.size();
    std::vector<double> tail_coeff(C, 0.0);
    std::vector<cplx> values(kernel_count);
    const double R = cfg.outer_radius;
    for (std::size_t s = 0; s < cfg.tail_samples; ++s) {
        const double th = two_pi * (static_cast<double>(s) + 0.5) /
                          static_cast<double>(cfg.tail_samples);
        const cplx z = R * cplx{std::cos(th), std::sin(th)};
        kernels(z, values);
        for (std::size_t k = 0; k < C; ++k) {
            cplx sum{};
            for (std::size_t j = 0; j < kernel_count; ++j)
                sum += combos[k][j] * values[j];
            tail_coeff[k] = std::max(tail_coeff[k], std::abs(sum) * R * R * R);
        }
    }

    std::vector<PlaneIntegral> result(C);
    for (std::size_t k = 0; k < C; ++k) {
        if (!std::isfinite(full[k]) || !std::isfinite(half[k]))
            throw quadrature_error("integrate_abs_combos: non-finite intermediate");
        result[k].tail = two_pi * tail_coeff[k] / R;
        result[k].value = full[k] + result[k].tail;
        // Midpoint rule converges O(h^2); Richardson puts the error of the
        // full grid near a third of the halving difference.
        result[k].error_estimate = std::abs(full[k] - half[k]) / 3.0;
    }
    return result;
}

PlaneIntegral integrate_abs(const std::function<cplx(cplx)>& f,
                            std::span<const cplx> singular_points,
                            const PlaneGridConfig& grid)
{
    const std::vector<std::vector<cplx>> combos{{cplx{1.0, 0.0}}};
    auto result = integrate_abs_combos(
        [&](cplx z, std::span<cplx> out) { out[0] = f(z); }, 1, combos,
        singular_points, grid);
    return result.front();
}

}  // namespace spider::quad
