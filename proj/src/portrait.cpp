#include "spider/portrait.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace spider {

using nlohmann::json;

int OrbitPortrait::id_of(const std::string& name) const
{
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return static_cast<int>(i);
    return -1;
}

std::vector<int> OrbitPortrait::pulled_back_ids() const
{
    std::vector<int> ids;
    for (int id = 0; id < static_cast<int>(names.size()); ++id) {
        if (id == zero_id || id == one_id || id == crit_id) continue;
        ids.push_back(id);
    }
    return ids;
}

std::optional<long> BranchAddress::lookup(int id) const
{
    auto it = entries.find(id);
    if (it == entries.end()) return std::nullopt;
    return it->second;
}

namespace {

const char* kForbiddenNames[] = {"inf", "infinity", "oo"};

bool forbidden_name(const std::string& name)
{
    return std::any_of(std::begin(kForbiddenNames), std::end(kForbiddenNames),
                       [&](const char* f) { return name == f; });
}

}  // namespace

OrbitPortrait make_portrait(int p, const std::vector<std::string>& orbit)
{
    const std::size_t L = orbit.size();
    if (L < 3)
        throw config_error("orbit: need at least start, the point 1 and a cycle marker");
    for (const auto& name : orbit) {
        if (name.empty()) throw config_error("orbit: empty point name");
        if (forbidden_name(name))
            throw config_error("orbit: name '" + name + "' is reserved for infinity");
    }
    for (std::size_t i = 0; i + 1 < L; ++i)
        for (std::size_t k = i + 1; k + 1 < L; ++k)
            if (orbit[i] == orbit[k])
                throw config_error("orbit: duplicate name '" + orbit[i] +
                                   "' before the cycle marker");

    if (orbit[1] != "1")
        throw config_error("orbit: second entry must be the point '1'");
    if (p == 0) {
        if (orbit[0] != "0")
            throw config_error("orbit: for p = 0 the orbit starts at '0'");
    } else {
        if (orbit[0] == "0" || orbit[0] == "1")
            throw config_error("orbit: for p >= 1 the orbit starts at the free "
                               "critical point, which cannot be '0' or '1'");
        for (std::size_t i = 1; i + 1 < L; ++i)
            if (orbit[i] == "0")
                throw config_error("orbit: '0' is implicit for p >= 1");
        if (orbit[L - 1] == "0")
            throw config_error("orbit: the cycle cannot close on '0'");
    }

    // Closing repeat marks the cycle entry.
    int j = -1;
    for (std::size_t i = 0; i + 1 < L; ++i)
        if (orbit[i] == orbit[L - 1]) { j = static_cast<int>(i); break; }
    if (j < 0)
        throw config_error("orbit: last entry must repeat an earlier point "
                           "(cycle marker)");

    OrbitPortrait portrait;
    portrait.p = p;
    if (p >= 1) {
        portrait.names.push_back("0");
        portrait.zero_id = 0;
    }
    for (std::size_t i = 0; i + 1 < L; ++i)
        portrait.names.push_back(orbit[i]);

    portrait.chain.reserve(L);
    for (const auto& name : orbit)
        portrait.chain.push_back(portrait.id_of(name));

    portrait.successor.assign(portrait.names.size(), -1);
    if (p >= 1) portrait.successor[portrait.zero_id] = portrait.zero_id;
    for (std::size_t i = 0; i + 1 < L; ++i)
        portrait.successor[portrait.chain[i]] = portrait.chain[i + 1];

    if (p == 0) portrait.zero_id = portrait.chain[0];
    else portrait.crit_id = portrait.chain[0];
    portrait.one_id = portrait.chain[1];

    portrait.k1 = std::max(j - 1, 0);
    portrait.l = static_cast<int>(L) - 1 - j;
    portrait.pair_first = portrait.chain[portrait.k1];
    portrait.pair_second = portrait.chain[portrait.k1 + portrait.l];
    portrait.pair_degenerate = portrait.pair_first == portrait.pair_second;
    portrait.degenerate_three = (p == 0 && portrait.names.size() == 2);
    return portrait;
}

namespace {

void check(ValidationReport& report, bool condition, const std::string& invariant,
           const std::string& detail)
{
    if (condition) return;
    report.ok = false;
    report.violations.push_back(invariant + ": " + detail);
}

}  // namespace

ValidationReport validate_portrait(const OrbitPortrait& portrait,
                                   const BranchAddress& address)
{
    ValidationReport report;
    const int n = static_cast<int>(portrait.names.size());

    check(report, portrait.p >= 0, "degree", "p must be non-negative");
    check(report, portrait.successor.size() == portrait.names.size(),
          "successor-total", "successor must be defined on all finite indices");
    for (int s : portrait.successor)
        check(report, s >= 0 && s < n, "successor-total", "successor out of range");
    if (!report.ok) return report;

    const auto& chain = portrait.chain;
    check(report, chain.size() >= 3, "orbit-structure", "orbit too short");
    for (std::size_t i = 0; i + 1 < chain.size(); ++i)
        check(report, portrait.successor[chain[i]] == chain[i + 1],
              "orbit-structure", "successor map disagrees with the orbit chain");
    check(report, portrait.l >= 1, "orbit-structure", "period must be positive");
    check(report, portrait.k1 >= 0, "orbit-structure", "preperiod must be non-negative");
    const int cycle_entry_pos = static_cast<int>(chain.size()) - 1 - portrait.l;
    check(report, cycle_entry_pos >= 0 && chain.back() == chain[cycle_entry_pos],
          "orbit-structure", "cycle marker inconsistent with period");
    check(report, cycle_entry_pos == portrait.k1 + 1 ||
                      (cycle_entry_pos == 0 && portrait.k1 == 0),
          "orbit-structure", "cycle entry must follow the preperiod");

    // Cycle membership from the chain: positions >= cycle entry.
    auto on_cycle = [&](int id) {
        for (std::size_t i = static_cast<std::size_t>(cycle_entry_pos);
             i + 1 < chain.size(); ++i)
            if (chain[i] == id) return true;
        return false;
    };

    check(report, portrait.one_id == chain[1], "orbit-start",
          "the point 1 must be the image of the orbit start");
    if (portrait.p == 0) {
        check(report, portrait.successor[portrait.zero_id] == portrait.one_id,
              "orbit-start", "successor(0) must be 1");
        check(report, !on_cycle(portrait.zero_id), "zero-omitted",
              "0 is omitted and cannot be periodic");
        for (int id = 0; id < n; ++id)
            check(report, portrait.successor[id] != portrait.zero_id,
                  "zero-omitted", "0 is omitted and cannot have a preimage");
    } else {
        check(report, portrait.successor[portrait.zero_id] == portrait.zero_id,
              "zero-fixed", "0 must be a fixed index for p >= 1");
        check(report, portrait.crit_id >= 0 &&
                          portrait.successor[portrait.crit_id] == portrait.one_id,
              "orbit-start", "the critical point must map to 1");
        const bool crit_periodic = on_cycle(portrait.crit_id);
        const bool one_periodic = on_cycle(portrait.one_id);
        check(report, crit_periodic || (!crit_periodic && !one_periodic),
              "critical-periodicity",
              "either c is periodic, or c and f(c) are both not periodic");
        for (int id = 0; id < n; ++id)
            if (id != portrait.zero_id)
                check(report, portrait.successor[id] != portrait.zero_id,
                      "zero-preimage", "only 0 maps to 0");
    }

    if (!portrait.degenerate_three)
        check(report, portrait.marked_count_with_infinity() >= 4,
              "min-marked-points",
              "need at least 4 marked points including infinity");

    report.pair.position_first = portrait.k1;
    report.pair.position_second = portrait.k1 + portrait.l;
    report.pair.id_first = portrait.pair_first;
    report.pair.id_second = portrait.pair_second;
    report.pair.degenerate = portrait.pair_degenerate;
    check(report,
          portrait.successor[portrait.pair_first] ==
              portrait.successor[portrait.pair_second],
          "marked-pair", "the marked pair must share its successor");
    if (portrait.pair_degenerate)
        check(report, portrait.p >= 1, "marked-pair",
              "a degenerate marked pair is only possible for periodic c, p >= 1");

    // Address entries may cover only the pulled-back ids plus the 1-point
    // (whose entry is the lambda branch of the closing equation).
    auto pulled = portrait.pulled_back_ids();
    for (const auto& [id, m] : address.entries) {
        (void)m;
        const bool is_pulled =
            std::find(pulled.begin(), pulled.end(), id) != pulled.end();
        check(report, is_pulled || id == portrait.one_id, "address-domain",
              "address entry for '" +
                  (id >= 0 && id < n ? portrait.names[id] : std::string("?")) +
                  "' which is not produced by an inverse branch");
    }

    return report;
}

namespace {

RunTolerances parse_tolerances(const json& j)
{
    RunTolerances t;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& key = it.key();
        if (key == "tol") t.tol = it.value().get<double>();
        else if (key == "gap_min") t.gap_min = it.value().get<double>();
        else if (key == "lambda_max") t.lambda_max = it.value().get<double>();
        else if (key == "max_iter") t.max_iter = it.value().get<long>();
        else if (key == "winding_steps") t.winding_steps = it.value().get<long>();
        else throw config_error("tolerances: unknown field '" + key + "'");
    }
    if (t.tol <= 0 || t.gap_min <= 0 || t.lambda_max <= 0 || t.max_iter < 1 ||
        t.winding_steps < 2)
        throw config_error("tolerances: values out of range");
    return t;
}

}  // namespace

RunConfig parse_run_config(const std::string& text)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw config_error(std::string("config syntax: ") + e.what());
    }
    if (!doc.is_object()) throw config_error("config: top level must be an object");

    RunConfig config;
    int p = -1;
    std::vector<std::string> orbit;
    json address_json = json::object();

    for (auto it = doc.begin(); it != doc.end(); ++it) {
        const std::string& key = it.key();
        const json& value = it.value();
        if (key == "schema_version") {
            if (!value.is_number_integer() || value.get<long>() != 1)
                throw config_error("config: unsupported schema_version");
        } else if (key == "p") {
            if (!value.is_number_integer() || value.get<long>() < 0)
                throw config_error("p: must be a non-negative integer");
            p = value.get<int>();
        } else if (key == "orbit") {
            if (!value.is_array()) throw config_error("orbit: must be an array");
            for (const auto& entry : value) {
                if (!entry.is_string())
                    throw config_error("orbit: entries must be point names");
                orbit.push_back(entry.get<std::string>());
            }
        } else if (key == "address") {
            if (!value.is_object()) throw config_error("address: must be a map");
            address_json = value;
        } else if (key == "eta") {
            if (!value.is_number_integer())
                throw config_error("eta: must be an integer");
            config.address.eta_claim = value.get<long>();
        } else if (key == "seed_lambda") {
            if (!value.is_array() || value.size() != 2 ||
                !value[0].is_number() || !value[1].is_number())
                throw config_error("seed_lambda: must be [re, im]");
            config.seed_lambda = cplx{value[0].get<double>(), value[1].get<double>()};
        } else if (key == "tolerances") {
            if (!value.is_object())
                throw config_error("tolerances: must be a map");
            config.tolerances = parse_tolerances(value);
        } else {
            throw config_error("config: unknown field '" + key + "'");
        }
    }

    if (p < 0) throw config_error("config: missing field 'p'");
    if (orbit.empty()) throw config_error("config: missing field 'orbit'");

    config.portrait = make_portrait(p, orbit);

    for (auto it = address_json.begin(); it != address_json.end(); ++it) {
        if (!it.value().is_number_integer())
            throw config_error("address: entry '" + it.key() +
                               "' must be an integer sheet index");
        const int id = config.portrait.id_of(it.key());
        if (id < 0)
            throw config_error("address: unknown point '" + it.key() + "'");
        config.address.entries[id] = it.value().get<long>();
    }

    if (config.seed_lambda && *config.seed_lambda == cplx{})
        throw config_error("seed_lambda: must be nonzero");

    const ValidationReport report = validate_portrait(config.portrait, config.address);
    if (!report.ok) {
        std::string detail;
        for (const auto& v : report.violations) {
            if (!detail.empty()) detail += "; ";
            detail += v;
        }
        throw validation_error("portrait", detail);
    }
    return config;
}

RunConfig load_run_config(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error("cannot open config file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_run_config(buffer.str());
}

std::string serialize_run_config(const RunConfig& config)
{
    json doc;
    doc["schema_version"] = 1;
    doc["p"] = config.portrait.p;
    json orbit = json::array();
    for (int id : config.portrait.chain) orbit.push_back(config.portrait.names[id]);
    doc["orbit"] = orbit;
    json address = json::object();
    for (const auto& [id, m] : config.address.entries)
        address[config.portrait.names[id]] = m;
    doc["address"] = address;
    if (config.address.eta_claim) doc["eta"] = *config.address.eta_claim;
    if (config.seed_lambda)
        doc["seed_lambda"] = {config.seed_lambda->real(), config.seed_lambda->imag()};
    doc["tolerances"] = {{"tol", config.tolerances.tol},
                         {"gap_min", config.tolerances.gap_min},
                         {"lambda_max", config.tolerances.lambda_max},
                         {"max_iter", config.tolerances.max_iter},
                         {"winding_steps", config.tolerances.winding_steps}};
    return doc.dump(2) + "\n";
}

}  // namespace spider
