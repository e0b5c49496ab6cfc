#pragma once

#include <functional>
#include <span>
#include <vector>

#include "spider/complex_ops.hpp"
#include "spider/errors.hpp"

namespace spider::quad {

/// Plane quadrature layout: local polar subgrids of radius r0 (half the
/// minimum separation) around each singular point, a global polar grid
/// out to outer_radius with the subgrid disks cut out, and an analytic
/// O(|z|^-3) tail beyond outer_radius calibrated on a sample circle.
struct PlaneGridConfig {
    double outer_radius = 30.0;
    std::size_t radial_cells = 384;
    std::size_t angular_cells = 256;
    std::size_t pole_radial_cells = 96;
    std::size_t pole_angular_cells = 128;
    std::size_t tail_samples = 256;
    bool parallel = true;  // serial reference path when false; same sums
};

struct PlaneIntegral {
    double value = 0.0;           // includes the analytic tail
    double error_estimate = 0.0;  // difference against one halved refinement
    double tail = 0.0;
};

/// Disk left out of the grid entirely; the caller accounts for its
/// contribution (e.g. from a local singularity model).
struct Exclusion {
    cplx center{};
    double radius = 0.0;
};

/// Kernel evaluator: fill `out` (kernel_count entries) at z.
using KernelFn = std::function<void(cplx z, std::span<cplx> out)>;

/// Integrates |sum_j combo[j] * kernel_j| over the plane for every combo
/// in one pass over the grid (kernel evaluations are shared).  Chunked
/// deterministic reduction: identical results for any thread count.
std::vector<PlaneIntegral> integrate_abs_combos(
    const KernelFn& kernels, std::size_t kernel_count,
    std::span<const std::vector<cplx>> combos,
    std::span<const cplx> singular_points, const PlaneGridConfig& grid,
    std::span<const Exclusion> exclusions = {});

/// Single-function convenience wrapper.
PlaneIntegral integrate_abs(const std::function<cplx(cplx)>& f,
                            std::span<const cplx> singular_points,
                            const PlaneGridConfig& grid);

}  // namespace spider::quad
