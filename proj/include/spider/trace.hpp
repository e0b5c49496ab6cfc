#pragma once

#include <vector>

#include "spider/complex_ops.hpp"

namespace spider {

enum class RunStatus { converged, diverged_lambda, collision, iteration_cap };

const char* to_string(RunStatus status);

/// One executed pullback step, recorded after the new configuration has
/// been accepted.  Displacements and gaps are spherical; the pair
/// positions refer to the new configuration (the curve the winding
/// number is computed along).
struct StepRecord {
    long n = 0;  // 1-based step count
    cplx lambda{};
    cplx alpha{};
    double displacement = 0.0;        // d_n
    double min_gap = 0.0;             // b_n
    long eta = 0;                     // eta_n
    double winding_residual = 0.0;
    double conjugacy_residual = 0.0;  // max_k |E(new_k) - old_{succ(k)}|
    cplx pair_first{};
    cplx pair_second{};
};

struct IterationTrace {
    std::vector<StepRecord> steps;
    RunStatus status = RunStatus::iteration_cap;
};

}  // namespace spider
