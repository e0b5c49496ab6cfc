#include <algorithm>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <future>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "spider/run_io.hpp"

namespace fs = std::filesystem;
using namespace spider;

namespace {

struct SolveFlags {
    std::string out;
    std::optional<double> tol, gap_min, lambda_max;
    std::optional<long> max_iter, winding_steps;
    std::vector<double> seed;
    bool serial = false;
};

void apply_flags(RunConfig& config, const SolveFlags& flags)
{
    if (flags.tol) config.tolerances.tol = *flags.tol;
    if (flags.gap_min) config.tolerances.gap_min = *flags.gap_min;
    if (flags.lambda_max) config.tolerances.lambda_max = *flags.lambda_max;
    if (flags.max_iter) config.tolerances.max_iter = *flags.max_iter;
    if (flags.winding_steps) config.tolerances.winding_steps = *flags.winding_steps;
    if (!flags.seed.empty())
        config.seed_lambda = cplx{flags.seed[0], flags.seed[1]};
}

int solve_one(const std::string& config_path, const SolveFlags& flags,
              bool quiet = false)
{
    if (!fs::exists(config_path)) {
        std::fprintf(stderr, "spider solve: missing config %s\n",
                     config_path.c_str());
        return io::kExitMissingInput;
    }

    RunConfig config;
    try {
        config = load_run_config(config_path);
        apply_flags(config, flags);
    } catch (const error& e) {
        std::fprintf(stderr, "spider solve: %s\n", e.what());
        return io::kExitUsage;
    }

    const std::string stem = fs::path(config_path).stem().stem().string();
    const std::string dir = io::make_run_directory(flags.out, stem);

    io::SolveArtifacts art = io::run_solve(config);
    io::write_file(dir + "/result.json", io::result_json(art));
    io::write_file(dir + "/trace.csv", io::trace_csv(art.result.trace));

    // Self-contained copy with the completed address map; trace-export
    // re-runs from it deterministically.
    RunConfig resolved = config;
    resolved.address = art.config.address;
    io::write_file(dir + "/config.spider.json", serialize_run_config(resolved));

    if (!quiet) {
        const char* status =
            art.error.empty() ? to_string(art.result.trace.status) : "error";
        std::printf("%s: %s (%zu steps) -> %s\n", config_path.c_str(), status,
                    art.result.trace.steps.size(), dir.c_str());
        if (!art.error.empty()) std::printf("  error: %s\n", art.error.c_str());
    }
    return art.exit_code;
}

int cmd_verify(const std::string& result_path, double tol)
{
    if (!fs::exists(result_path)) {
        std::fprintf(stderr, "spider verify: missing result %s\n",
                     result_path.c_str());
        return io::kExitMissingInput;
    }
    try {
        const io::StoredResult stored = io::read_result(result_path);
        if (!stored.converged) {
            std::printf("verify: stored status is '%s', nothing to verify\n",
                        stored.status.c_str());
            return io::kExitVerifyFailed;
        }
        const ExpParams params =
            make_params(stored.config.portrait.p, stored.lambda);
        const OrbitVerification report =
            verify_orbit(params, stored.config.portrait, tol);
        std::printf("verify: %s (closure %.3e, min separation %.3e)\n",
                    report.pass ? "pass" : "fail", report.closure_error,
                    report.min_separation);
        return report.pass ? io::kExitOk : io::kExitVerifyFailed;
    } catch (const config_error& e) {
        std::fprintf(stderr, "spider verify: %s\n", e.what());
        return io::kExitUsage;
    } catch (const error& e) {
        std::fprintf(stderr, "spider verify: %s\n", e.what());
        return io::kExitVerifyFailed;
    }
}

int cmd_qd_analyze(const std::string& result_path, int branches,
                   std::size_t grid, const std::string& out,
                   unsigned long long rng_seed, bool serial)
{
    if (!fs::exists(result_path)) {
        std::fprintf(stderr, "spider qd-analyze: missing result %s\n",
                     result_path.c_str());
        return io::kExitMissingInput;
    }
    if (branches < 1 || grid < 8) {
        std::fprintf(stderr, "spider qd-analyze: --branches and --grid must be "
                             "positive (got %d, %zu)\n",
                     branches, grid);
        return io::kExitUsage;
    }
    try {
        const io::StoredResult stored = io::read_result(result_path);
        if (!stored.converged) {
            std::fprintf(stderr,
                         "spider qd-analyze: stored status is '%s', need a "
                         "converged result\n",
                         stored.status.c_str());
            return io::kExitDiverged;
        }
        const ExpParams params =
            make_params(stored.config.portrait.p, stored.lambda);
        TransferOptions opts;
        opts.branches = branches;
        opts.grid = grid;
        opts.rng_seed = rng_seed;
        opts.parallel = !serial;
        const ContractionReport report =
            contraction_estimate(params, stored.positions, opts);
        const std::string dir =
            out.empty() ? fs::path(result_path).parent_path().string() : out;
        if (!dir.empty()) fs::create_directories(dir);
        const std::string path =
            (dir.empty() ? std::string(".") : dir) + "/qd_report.json";
        io::write_file(path, io::qd_report_json(params, report));
        std::printf("qd-analyze: %d basis elements, max ratio %.6f, delta %.6f "
                    "-> %s\n",
                    report.basis_size, report.max_ratio, report.delta,
                    path.c_str());
        return io::kExitOk;
    } catch (const config_error& e) {
        std::fprintf(stderr, "spider qd-analyze: %s\n", e.what());
        return io::kExitUsage;
    } catch (const error& e) {
        std::fprintf(stderr, "spider qd-analyze: %s\n", e.what());
        return io::kExitDiverged;
    }
}

int cmd_trace_export(const std::string& run_dir)
{
    const std::string config_path = run_dir + "/config.spider.json";
    if (!fs::exists(run_dir) || !fs::exists(config_path)) {
        std::fprintf(stderr,
                     "spider trace-export: %s is not a run directory (no "
                     "config.spider.json)\n",
                     run_dir.c_str());
        return io::kExitMissingInput;
    }
    try {
        const RunConfig config = load_run_config(config_path);
        std::ostringstream points;
        points << "step,index,re,im\n";
        const auto& names = config.portrait.names;
        const auto observer = [&](long step, const MarkedConfiguration& cfg) {
            for (std::size_t id = 0; id < cfg.positions.size(); ++id)
                points << step << ',' << names[id] << ','
                       << io::format_double(cfg.positions[id].real()) << ','
                       << io::format_double(cfg.positions[id].imag()) << "\n";
        };
        io::SolveArtifacts art = io::run_solve(config, observer);
        if (!art.error.empty()) {
            std::fprintf(stderr, "spider trace-export: re-run failed: %s\n",
                         art.error.c_str());
            return io::kExitDiverged;
        }
        io::write_file(run_dir + "/points.csv", points.str());
        std::printf("trace-export: %zu steps x %zu points -> %s/points.csv\n",
                    art.result.trace.steps.size() + 1, names.size(),
                    run_dir.c_str());
        return io::kExitOk;
    } catch (const error& e) {
        std::fprintf(stderr, "spider trace-export: %s\n", e.what());
        return io::kExitUsage;
    }
}

int cmd_batch(const std::vector<std::string>& configs, const SolveFlags& flags,
              unsigned jobs)
{
    if (jobs == 0) jobs = 1;
    std::vector<int> codes(configs.size(), 0);
    std::size_t next = 0;
    while (next < configs.size()) {
        const std::size_t begin = next;
        const std::size_t end = std::min(configs.size(), begin + jobs);
        std::vector<std::future<int>> wave;
        for (std::size_t i = begin; i < end; ++i)
            wave.push_back(std::async(std::launch::async, [&, i] {
                SolveFlags per = flags;
                if (!flags.out.empty())
                    per.out = flags.out + "/" +
                              fs::path(configs[i]).stem().stem().string();
                return solve_one(configs[i], per, true);
            }));
        for (std::size_t i = begin; i < end; ++i) {
            codes[i] = wave[i - begin].get();
            std::printf("%s: exit %d\n", configs[i].c_str(), codes[i]);
        }
        next = end;
    }
    int worst = 0;
    for (int c : codes) worst = std::max(worst, c);
    return worst;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Thurston pullback solver for post-singularly finite "
                 "exponential maps"};
    app.require_subcommand(1);

    SolveFlags flags;
    std::string config_path, result_path, run_dir, out;
    std::vector<std::string> batch_configs;
    double verify_tol = 1e-9;
    int branches = 128;
    std::size_t grid = 384;
    unsigned long long rng_seed = 20240801ULL;
    unsigned jobs = 2;
    bool serial = false;

    auto add_solve_flags = [&](CLI::App* cmd) {
        cmd->add_option("--out", flags.out, "run directory (default: stem + timestamp)");
        cmd->add_option("--tol", flags.tol, "convergence tolerance on displacement");
        cmd->add_option("--gap-min", flags.gap_min, "collision gap threshold");
        cmd->add_option("--lambda-max", flags.lambda_max, "compactness budget on |lambda|");
        cmd->add_option("--max-iter", flags.max_iter, "iteration cap");
        cmd->add_option("--winding-steps", flags.winding_steps, "trapezoid subdivisions");
        cmd->add_option("--seed", flags.seed, "seed lambda as RE IM")->expected(2);
    };

    CLI::App* solve = app.add_subcommand("solve", "run the pullback iteration");
    solve->add_option("config", config_path, "run-config document")->required();
    add_solve_flags(solve);

    CLI::App* verify = app.add_subcommand("verify", "re-check a stored result");
    verify->add_option("result", result_path, "result.json path")->required();
    verify->add_option("--tol", verify_tol, "orbit-closure tolerance");

    CLI::App* qd = app.add_subcommand("qd-analyze",
                                      "transfer-operator contraction estimate");
    qd->add_option("result", result_path, "result.json path")->required();
    qd->add_option("--branches", branches, "branch truncation M");
    qd->add_option("--grid", grid, "quadrature grid resolution");
    qd->add_option("--out", out, "output directory (default: next to result)");
    qd->add_option("--rng-seed", rng_seed, "seed for the random combinations");
    qd->add_flag("--serial", serial, "disable the OpenMP kernels");

    CLI::App* trace = app.add_subcommand("trace-export",
                                         "emit marked-point trajectories");
    trace->add_option("rundir", run_dir, "run directory from solve")->required();

    CLI::App* batch = app.add_subcommand("batch", "solve several configs");
    batch->add_option("configs", batch_configs, "run-config documents")->required();
    batch->add_option("--jobs", jobs, "concurrent runs");
    add_solve_flags(batch);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : io::kExitUsage;
    }

    if (solve->parsed()) return solve_one(config_path, flags);
    if (verify->parsed()) return cmd_verify(result_path, verify_tol);
    if (qd->parsed())
        return cmd_qd_analyze(result_path, branches, grid, out, rng_seed, serial);
    if (trace->parsed()) return cmd_trace_export(run_dir);
    if (batch->parsed()) return cmd_batch(batch_configs, flags, jobs);
    return io::kExitUsage;
}
