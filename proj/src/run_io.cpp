#include "spider/run_io.hpp"

#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace spider::io {

namespace {

constexpr double kVerifyTol = 1e-9;

std::string json_string(const std::string& s)
{
    std::string out = "\"";
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    return out + "\"";
}

std::string complex_json(cplx z)
{
    return "{\"re\": " + format_double(z.real()) +
           ", \"im\": " + format_double(z.imag()) + "}";
}

}  // namespace

std::string format_double(double x)
{
    if (!std::isfinite(x)) return "null";
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.16e", x);
    return buf;
}

SolveArtifacts run_solve(const RunConfig& config, const StepObserver& observer)
{
    SolveArtifacts art;
    art.config = config;

    if (!config.seed_lambda) {
        art.error = "seed_lambda required (config field or --seed)";
        art.exit_code = kExitUsage;
        return art;
    }

    try {
        const MarkedConfiguration init =
            initial_configuration(config.portrait, *config.seed_lambda);
        IterationOptions opts;
        opts.tolerances = config.tolerances;
        opts.seed_lambda = config.seed_lambda;
        art.result = iterate(config.portrait, config.address, init, opts, observer);
        art.config.address = art.result.used_address;

        if (art.result.trace.status == RunStatus::converged) {
            art.verify =
                verify_orbit(*art.result.params, config.portrait, kVerifyTol);
            art.eta_invariant = check_eta_invariance(art.result.trace);
            art.bounds = check_lambda_bounds(art.result.trace, config.portrait);
            if (config.address.eta_claim && !art.result.trace.steps.empty())
                art.eta_claim_ok =
                    art.result.trace.steps.back().eta == *config.address.eta_claim;
            const bool bounds_ok = !art.bounds->applicable || art.bounds->holds;
            const bool clean = art.verify->pass && art.eta_invariant && bounds_ok &&
                               art.eta_claim_ok;
            art.exit_code = clean ? kExitOk : kExitVerifyFailed;
        } else {
            art.exit_code = kExitDiverged;
        }
    } catch (const config_error& e) {
        art.error = e.what();
        art.exit_code = kExitUsage;
    } catch (const error& e) {
        art.error = e.what();
        art.exit_code = kExitDiverged;
    }
    return art;
}

std::string result_json(const SolveArtifacts& art)
{
    const OrbitPortrait& portrait = art.config.portrait;
    const IterationTrace& trace = art.result.trace;
    std::ostringstream out;
    out << "{\n";
    out << "  \"schema_version\": 1,\n";

    const bool converged =
        art.error.empty() && trace.status == RunStatus::converged;
    const char* status = !art.error.empty() ? "error" : to_string(trace.status);
    out << "  \"status\": " << json_string(status) << ",\n";
    out << "  \"p\": " << portrait.p << ",\n";

    cplx lambda{}, alpha{};
    if (converged) {
        lambda = art.result.params->lambda;
        alpha = art.result.params->alpha;
    } else if (!trace.steps.empty()) {
        lambda = trace.steps.back().lambda;
        alpha = trace.steps.back().alpha;
    }
    out << "  \"lambda\": " << complex_json(lambda) << ",\n";
    out << "  \"alpha\": " << complex_json(alpha) << ",\n";
    out << "  \"iterations\": " << trace.steps.size() << ",\n";
    out << "  \"final_displacement\": "
        << format_double(trace.steps.empty() ? 0.0
                                             : trace.steps.back().displacement)
        << ",\n";
    out << "  \"final_residual\": "
        << format_double(trace.steps.empty()
                             ? 0.0
                             : trace.steps.back().conjugacy_residual)
        << ",\n";
    out << "  \"eta\": " << (trace.steps.empty() ? 0 : trace.steps.back().eta)
        << ",\n";
    out << "  \"eta_invariant\": " << (art.eta_invariant ? "true" : "false")
        << ",\n";
    out << "  \"eta_claim_ok\": " << (art.eta_claim_ok ? "true" : "false")
        << ",\n";

    if (art.bounds) {
        const LambdaBoundsReport& b = *art.bounds;
        out << "  \"bound\": {\"applicable\": "
            << (b.applicable ? "true" : "false")
            << ", \"holds\": " << (b.holds ? "true" : "false")
            << ", \"pair_degenerate\": " << (b.pair_degenerate ? "true" : "false")
            << ", \"kappa\": " << format_double(b.kappa)
            << ", \"K\": " << format_double(b.K)
            << ", \"tightest_ratio\": " << format_double(b.tightest_ratio)
            << "},\n";
    } else {
        out << "  \"bound\": null,\n";
    }

    if (art.verify) {
        const OrbitVerification& v = *art.verify;
        out << "  \"verify\": {\"pass\": " << (v.pass ? "true" : "false")
            << ", \"closure_error\": " << format_double(v.closure_error)
            << ", \"min_separation\": " << format_double(v.min_separation)
            << ", \"pattern_ok\": " << (v.pattern_ok ? "true" : "false")
            << ", \"tol\": " << format_double(v.tol) << "},\n";
    } else {
        out << "  \"verify\": null,\n";
    }

    out << "  \"orbit\": [";
    for (std::size_t i = 0; i < portrait.chain.size(); ++i) {
        if (i) out << ", ";
        out << json_string(portrait.names[portrait.chain[i]]);
    }
    out << "],\n";

    out << "  \"address\": {";
    bool first = true;
    for (const auto& [id, m] : art.config.address.entries) {
        if (!first) out << ", ";
        first = false;
        out << json_string(portrait.names[id]) << ": " << m;
    }
    out << "},\n";

    if (art.config.seed_lambda)
        out << "  \"seed_lambda\": " << complex_json(*art.config.seed_lambda)
            << ",\n";
    else
        out << "  \"seed_lambda\": null,\n";

    const RunTolerances& t = art.config.tolerances;
    out << "  \"tolerances\": {\"tol\": " << format_double(t.tol)
        << ", \"gap_min\": " << format_double(t.gap_min)
        << ", \"lambda_max\": " << format_double(t.lambda_max)
        << ", \"max_iter\": " << t.max_iter
        << ", \"winding_steps\": " << t.winding_steps << "},\n";

    out << "  \"positions\": {";
    first = true;
    for (std::size_t id = 0; id < art.result.final_config.positions.size(); ++id) {
        if (!first) out << ", ";
        first = false;
        out << json_string(portrait.names[id]) << ": "
            << complex_json(art.result.final_config.positions[id]);
    }
    out << "},\n";

    out << "  \"error\": "
        << (art.error.empty() ? std::string("null") : json_string(art.error))
        << "\n";
    out << "}\n";
    return out.str();
}

std::string trace_csv(const IterationTrace& trace)
{
    std::ostringstream out;
    out << "n,lambda_re,lambda_im,d_n,b_n,eta_n\n";
    for (const StepRecord& s : trace.steps) {
        out << s.n << ',' << format_double(s.lambda.real()) << ','
            << format_double(s.lambda.imag()) << ','
            << format_double(s.displacement) << ',' << format_double(s.min_gap)
            << ',' << s.eta << "\n";
    }
    return out.str();
}

std::string qd_report_json(const ExpParams& params, const ContractionReport& report)
{
    std::ostringstream out;
    out << "{\n";
    out << "  \"schema_version\": 1,\n";
    out << "  \"p\": " << params.p << ",\n";
    out << "  \"lambda\": " << complex_json(params.lambda) << ",\n";
    out << "  \"branches\": " << report.branches << ",\n";
    out << "  \"grid\": " << report.grid << ",\n";
    out << "  \"basis_size\": " << report.basis_size << ",\n";
    out << "  \"max_ratio\": " << format_double(report.max_ratio) << ",\n";
    out << "  \"delta\": " << format_double(report.delta) << ",\n";
    out << "  \"max_error_bound\": " << format_double(report.max_error_bound)
        << ",\n";
    out << "  \"rows\": [";
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
        const ContractionRow& r = report.rows[i];
        if (i) out << ",";
        out << "\n    {\"kind\": " << json_string(r.kind)
            << ", \"index\": " << r.index
            << ", \"numerator\": " << format_double(r.numerator)
            << ", \"denominator\": " << format_double(r.denominator)
            << ", \"ratio\": " << format_double(r.ratio)
            << ", \"error_bound\": " << format_double(r.error_bound) << "}";
    }
    out << (report.rows.empty() ? "]\n" : "\n  ]\n");
    out << "}\n";
    return out.str();
}

StoredResult read_result(const std::string& path)
{
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw config_error(std::string("result parse: ") + e.what());
    }
    try {
        StoredResult stored;
        stored.status = doc.at("status").get<std::string>();
        stored.converged = stored.status == "converged";
        const int p = doc.at("p").get<int>();
        std::vector<std::string> orbit;
        for (const auto& name : doc.at("orbit"))
            orbit.push_back(name.get<std::string>());
        stored.config.portrait = make_portrait(p, orbit);
        for (auto it = doc.at("address").begin(); it != doc.at("address").end(); ++it) {
            const int id = stored.config.portrait.id_of(it.key());
            if (id < 0) throw config_error("result: unknown address key " + it.key());
            stored.config.address.entries[id] = it.value().get<long>();
        }
        auto get_complex = [&](const nlohmann::json& j) {
            return cplx{j.at("re").get<double>(), j.at("im").get<double>()};
        };
        stored.lambda = get_complex(doc.at("lambda"));
        stored.alpha = get_complex(doc.at("alpha"));
        stored.iterations = doc.at("iterations").get<long>();
        stored.eta = doc.at("eta").get<long>();
        if (!doc.at("seed_lambda").is_null())
            stored.config.seed_lambda = get_complex(doc.at("seed_lambda"));
        const auto& tol = doc.at("tolerances");
        stored.config.tolerances.tol = tol.at("tol").get<double>();
        stored.config.tolerances.gap_min = tol.at("gap_min").get<double>();
        stored.config.tolerances.lambda_max = tol.at("lambda_max").get<double>();
        stored.config.tolerances.max_iter = tol.at("max_iter").get<long>();
        stored.config.tolerances.winding_steps = tol.at("winding_steps").get<long>();
        stored.positions.assign(stored.config.portrait.names.size(), cplx{});
        for (auto it = doc.at("positions").begin(); it != doc.at("positions").end();
             ++it) {
            const int id = stored.config.portrait.id_of(it.key());
            if (id < 0) throw config_error("result: unknown position key " + it.key());
            stored.positions[id] = get_complex(it.value());
        }
        return stored;
    } catch (const nlohmann::json::exception& e) {
        throw config_error(std::string("result fields: ") + e.what());
    }
}

void write_file(const std::string& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw error("cannot write " + path);
    out << content;
}

std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string make_run_directory(const std::string& out, const std::string& stem)
{
    namespace fs = std::filesystem;
    if (!out.empty()) {
        fs::create_directories(out);
        return out;
    }
    const std::time_t now = std::time(nullptr);
    std::tm utc{};
    gmtime_r(&now, &utc);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y%m%d-%H%M%S", &utc);
    std::string base = stem + "-" + stamp;
    std::string dir = base;
    for (int suffix = 2; fs::exists(dir); ++suffix)
        dir = base + "-" + std::to_string(suffix);
    fs::create_directories(dir);
    return dir;
}

}  // namespace spider::io
