#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "spider/diagnostics.hpp"
#include "spider/run_io.hpp"

using namespace spider;

namespace {

const char* kPiConfig = R"({
    "p": 0, "orbit": ["0", "1", "A", "A"], "address": {"1": 0, "A": -1},
    "seed_lambda": [0.0, 2.5132741228718345], "tolerances": {"tol": 1e-12}})";

}  // namespace

TEST_CASE("double formatting is 17 significant digits, lowercase scientific")
{
    CHECK(io::format_double(1.0) == "1.0000000000000000e+00");
    CHECK(io::format_double(-0.5) == "-5.0000000000000000e-01");
    CHECK(io::format_double(3.141592653589793) == "3.1415926535897931e+00");
    CHECK(io::format_double(0.0078125) == "7.8125000000000000e-03");
    // 17 significant digits render the double faithfully, not the decimal
    CHECK(io::format_double(1e-11) == "9.9999999999999994e-12");
}

TEST_CASE("result json round trips through the reader")
{
    const RunConfig config = parse_run_config(kPiConfig);
    const io::SolveArtifacts art = io::run_solve(config);
    REQUIRE(art.exit_code == io::kExitOk);

    const std::string path =
        (std::filesystem::temp_directory_path() / "spider-io-result.json").string();
    io::write_file(path, io::result_json(art));
    const io::StoredResult stored = io::read_result(path);

    CHECK(stored.converged);
    CHECK(stored.lambda == art.result.params->lambda);
    CHECK(stored.alpha == art.result.params->alpha);
    CHECK(stored.config.portrait.names == config.portrait.names);
    CHECK(stored.config.address.entries == art.config.address.entries);
    CHECK(stored.iterations ==
          static_cast<long>(art.result.trace.steps.size()));
    REQUIRE(stored.positions.size() == art.result.final_config.positions.size());
    for (std::size_t i = 0; i < stored.positions.size(); ++i)
        CHECK(stored.positions[i] == art.result.final_config.positions[i]);
    std::filesystem::remove(path);
}

TEST_CASE("trace csv has the fixed column layout")
{
    IterationTrace trace;
    StepRecord step;
    step.n = 1;
    step.lambda = cplx{0.0, 1.0};
    step.displacement = 0.5;
    step.min_gap = 0.25;
    step.eta = -1;
    trace.steps.push_back(step);
    const std::string csv = io::trace_csv(trace);
    CHECK(csv.find("n,lambda_re,lambda_im,d_n,b_n,eta_n\n") == 0);
    CHECK(csv.find("1,0.0000000000000000e+00,1.0000000000000000e+00,"
                   "5.0000000000000000e-01,2.5000000000000000e-01,-1\n") !=
          std::string::npos);
}

TEST_CASE("an eta claim that disagrees with the run fails the gate")
{
    RunConfig config = parse_run_config(kPiConfig);
    config.address.eta_claim = 5;  // the run winds by -1
    const io::SolveArtifacts art = io::run_solve(config);
    CHECK(art.result.trace.status == RunStatus::converged);
    CHECK(!art.eta_claim_ok);
    CHECK(art.exit_code == io::kExitVerifyFailed);
}

TEST_CASE("geometry reports carry the per-step bound data")
{
    const RunConfig config = parse_run_config(kPiConfig);
    const io::SolveArtifacts art = io::run_solve(config);
    REQUIRE(art.exit_code == io::kExitOk);
    const auto reports = geometry_reports(art.result.trace, config.portrait);
    REQUIRE(reports.size() == art.result.trace.steps.size());
    for (const GeometryReport& g : reports) {
        CHECK(g.b_n >= 0.0);
        CHECK(g.b_n <= 1.0);
        CHECK(g.eta_n == -1);
        CHECK(g.ok);
        if (g.kappa > 0.0) CHECK(g.lambda_bound > 0.0);
    }
    // at the converged tail the bound is attained: |lambda| / bound -> 1
    CHECK(std::abs(reports.back().lambda_bound -
                   std::abs(art.result.params->lambda)) < 1e-9);
}
