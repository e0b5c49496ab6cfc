#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "spider/complex_ops.hpp"
#include "spider/errors.hpp"

namespace spider {

/// Finite post-singular combinatorics.  Points are interned as small ids;
/// the orbit chain lists ids in successor order, ending with the closing
/// repeat that marks the cycle.
///
/// Conventions enforced by the parser:
///   p = 0:   orbit[0] is the point "0" (the orbit of the asymptotic value
///            starts there), orbit[1] is "1".
///   p >= 1:  orbit[0] is the free critical point (any name except "0"
///            and "1"), orbit[1] is "1"; the fixed point 0 is implicit
///            and gets its own id named "0".
struct OrbitPortrait {
    int p = 0;
    std::vector<std::string> names;  // id -> name, all finite marked points
    std::vector<int> successor;      // id -> id
    std::vector<int> chain;          // orbit position -> id, incl. closing repeat
    int k1 = 0;                      // preperiod
    int l = 1;                       // period
    int zero_id = -1;
    int one_id = -1;
    int crit_id = -1;                // -1 when p = 0
    int pair_first = -1;             // id at orbit position k1
    int pair_second = -1;            // id at orbit position k1 + l
    bool degenerate_three = false;   // #P_f = 3 (p = 0, orbit 0 -> 1 -> 1)
    bool pair_degenerate = false;    // p >= 1 with periodic critical point

    int id_of(const std::string& name) const;
    std::size_t marked_count_with_infinity() const { return names.size() + 1; }

    /// Ids whose new position is produced by an addressed inverse branch:
    /// everything except the pinned 0 and 1, and except the critical
    /// point for p >= 1 (its preimage is forced).
    std::vector<int> pulled_back_ids() const;
};

/// Sheet indices in the fixed principal-logarithm convention.  The entry
/// for the 1-point is the lambda branch consumed by the closing equation;
/// every pulled-back id carries the branch of its own preimage.  Entries
/// may be left for the solver to derive from the seed configuration.
struct BranchAddress {
    std::map<int, long> entries;
    std::optional<long> eta_claim;

    std::optional<long> lookup(int id) const;
};

struct RunTolerances {
    double tol = 1e-11;
    double gap_min = 1e-9;
    double lambda_max = 1e6;
    long max_iter = 10000;
    long winding_steps = 4096;
};

struct RunConfig {
    OrbitPortrait portrait;
    BranchAddress address;
    std::optional<cplx> seed_lambda;
    RunTolerances tolerances;
};

struct MarkedPair {
    int position_first = 0;   // orbit position k1
    int position_second = 0;  // orbit position k2 = k1 + l
    int id_first = -1;
    int id_second = -1;
    bool degenerate = false;
};

struct ValidationReport {
    bool ok = true;
    std::vector<std::string> violations;  // "invariant-name: detail"
    MarkedPair pair;
};

/// Build a portrait from a degree and an orbit list (successor order,
/// closing repeat as cycle marker).  Throws config_error on structural
/// problems.
OrbitPortrait make_portrait(int p, const std::vector<std::string>& orbit);

/// Parse a .spider.json run-config document.  Throws config_error on
/// syntax problems; semantic violations come back via validate_portrait,
/// which the parser runs (and throws validation_error on failure).
RunConfig parse_run_config(const std::string& text);

/// Convenience: read and parse a config file.
RunConfig load_run_config(const std::string& path);

/// Check every portrait invariant by name and report the marked pair.
ValidationReport validate_portrait(const OrbitPortrait& portrait,
                                   const BranchAddress& address);

/// Canonical JSON form; parse(serialize(x)) reproduces x.
std::string serialize_run_config(const RunConfig& config);

}  // namespace spider
