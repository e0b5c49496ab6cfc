#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "spider/diagnostics.hpp"
#include "spider/oracle.hpp"
#include "spider/portrait.hpp"
#include "spider/pullback.hpp"
#include "spider/qd_transfer.hpp"

namespace spider::io {

// Exit codes shared by the CLI.
inline constexpr int kExitOk = 0;
inline constexpr int kExitVerifyFailed = 1;
inline constexpr int kExitDiverged = 2;
inline constexpr int kExitUsage = 64;
inline constexpr int kExitMissingInput = 66;

/// Doubles are serialized with 17 significant digits, lowercase
/// scientific notation, so equal values give byte-identical files.
std::string format_double(double x);

struct SolveArtifacts {
    RunConfig config;  // address completed with derived entries
    IterationResult result;
    std::optional<OrbitVerification> verify;
    bool eta_invariant = false;
    std::optional<LambdaBoundsReport> bounds;
    bool eta_claim_ok = true;
    std::string error;  // nonempty when a stage threw
    int exit_code = kExitDiverged;
};

/// Solve pipeline behind `solve`: initial configuration, iteration,
/// orbit verification and diagnostics.  Never throws for run outcomes;
/// the exit code and error field carry them.
SolveArtifacts run_solve(const RunConfig& config,
                         const StepObserver& observer = {});

std::string result_json(const SolveArtifacts& artifacts);
std::string trace_csv(const IterationTrace& trace);
std::string qd_report_json(const ExpParams& params, const ContractionReport& report);

/// Snapshot of a stored result.json, enough to re-verify and to run the
/// transfer-operator analysis.
struct StoredResult {
    RunConfig config;
    std::string status;
    cplx lambda{};
    cplx alpha{};
    long iterations = 0;
    long eta = 0;
    std::vector<cplx> positions;  // by portrait id
    bool converged = false;
};

StoredResult read_result(const std::string& path);

void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

/// Run directory: `out` when given, else "<stem>-<UTC timestamp>" with a
/// numeric suffix on collision.  Created on disk.
std::string make_run_directory(const std::string& out, const std::string& stem);

}  // namespace spider::io
