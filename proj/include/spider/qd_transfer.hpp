#pragma once

#include <span>
#include <string>
#include <vector>

#include "spider/complex_ops.hpp"
#include "spider/errors.hpp"
#include "spider/exp_family.hpp"
#include "spider/quadrature.hpp"

namespace spider {

/// Integrable meromorphic quadratic differential phi(z) dz^2 with simple
/// poles at the marked points:  phi(z) = sum_j a_j / (z - p_j).
/// Integrability at infinity needs sum a_j = 0 and sum a_j p_j = 0, which
/// makes phi = O(|z|^-3) and leaves at worst a simple pole of the
/// differential at infinity.
struct QuadDifferential {
    std::vector<cplx> poles;
    std::vector<cplx> residues;

    cplx eval(cplx z) const;
    bool is_zero() const;
};

/// Basis of the (m - 3)-dimensional space of such differentials on the
/// given finite marked points (m counts infinity).  Fewer than 3 finite
/// points give the empty basis (rigid sphere).  Construction solves the
/// two linear constraints against canonical residue vectors; independence
/// is verified by a rank check on the residue matrix.
std::vector<QuadDifferential> qd_basis(std::span<const cplx> marked_finite);

struct TransferOptions {
    int branches = 128;       // truncation M of the branch sum
    std::size_t grid = 384;   // radial resolution of the global grid
    int random_combos = 20;
    unsigned long long rng_seed = 20240801ULL;
    bool parallel = true;
    double outer_radius = 0.0;  // 0 = auto: 10 * max(scale, |lambda|)
};

struct NormResult {
    double value = 0.0;
    double error_estimate = 0.0;
    double tail = 0.0;
};

/// L1 norm over the plane: polar subgrids around the poles, a global
/// grid out to R, and the analytic O(|z|^-3) tail.
NormResult qd_norm(const QuadDifferential& q, const TransferOptions& opts = {});

struct PushforwardValue {
    cplx value = {};
    double tail_bound = 0.0;  // truncated branches, compared against sum 1/m^2
};

/// Transfer-operator value  (L phi)(z) = sum_{E(w)=z} phi(w) / E'(w)^2
/// truncated to sheet indices |m| <= M (plus the p root sheets for
/// p >= 1).  z = 0 and, for p >= 1, z within 1e-4 of the critical value
/// are rejected.
PushforwardValue pushforward_values(const ExpParams& params,
                                    const QuadDifferential& q, cplx z, int M);

struct ContractionRow {
    std::string kind;  // "basis" | "random"
    int index = 0;
    double numerator = 0.0;    // ||E_* q||
    double denominator = 0.0;  // ||q||
    double ratio = 0.0;
    double error_bound = 0.0;  // quadrature + truncation, relative to ||q||
};

struct ContractionReport {
    int basis_size = 0;
    int branches = 0;
    std::size_t grid = 0;
    std::vector<ContractionRow> rows;
    double max_ratio = 0.0;
    double delta = 0.0;  // 1 - max_ratio
    double max_error_bound = 0.0;
};

/// Ratio ||E_* q|| / ||q|| over the basis elements and random unit-norm
/// combinations; strictly below 1 at a converged configuration.  One grid
/// pass serves every candidate (the pushed pole kernels are shared).
ContractionReport contraction_estimate(const ExpParams& params,
                                       std::span<const cplx> marked_finite,
                                       const TransferOptions& opts = {});

}  // namespace spider
