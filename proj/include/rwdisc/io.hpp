#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "rwdisc/analysis.hpp"
#include "rwdisc/certificates.hpp"
#include "rwdisc/core.hpp"
#include "rwdisc/walk.hpp"

namespace rwdisc {

using json = nlohmann::json;

// ---- generators ------------------------------------------------------------

struct GeneratedSetSystem {
    SetSystemInstance instance;
    bool degree_attained = false;  ///< some element lies in exactly t sets
};

/// Adds random sets with sizes uniform in [min_size, max_size] drawn from the
/// elements of degree < t, until fewer than min_size such elements remain.
/// The last set may be shorter than its drawn size but never below min_size.
GeneratedSetSystem gen_set_system(int n, int t, int min_size, int max_size, std::uint64_t seed);

enum class EntryDistribution { Sign, Gaussian };

/// Each entry is nonzero with probability `density`; columns are then scaled
/// to unit norm (empty columns stay zero).
MatrixInstance gen_komlos_matrix(int m, int n, double density, std::uint64_t seed,
                                 EntryDistribution dist = EntryDistribution::Sign);

// ---- instance files --------------------------------------------------------

inline constexpr double kLoadNormSlack = 1e-9;

struct InstanceFile {
    Instance instance;
    json meta = json::object();
};

json instance_to_json(const Instance& instance, const json& meta = json::object());
/// Validates the document; throws InputError on any schema or invariant breach.
InstanceFile instance_from_json(const json& doc);

void save_json(const std::string& path, const json& doc);
json load_json(const std::string& path);

// ---- reports ---------------------------------------------------------------

json params_to_json(const WalkParams& params);
WalkParams params_from_json(const json& doc);

/// Report document. Everything except the "timing" object is a deterministic
/// function of instance, parameters and seed.
json report_to_json(const Instance& instance, const RunReport& report);

/// Copy of `doc` without timing fields, for determinism comparisons.
json strip_timing(json doc);

struct VerifyResult {
    bool ok = true;
    std::vector<std::string> problems;
};

/// Recomputes every discrepancy from the coloring and the instance.
VerifyResult verify_report(const Instance& instance, const json& report, double tol = 1e-9);

json residuals_to_json(const ResidualReport& r);
json certificate_to_json(const CertificateReport& c);
json tail_to_json(const TailTable& table);

// ---- CSV -------------------------------------------------------------------

/// Columns k, objective, G_k, frozen_count, then D/E/Q/L/Qp/Z for every ledger.
/// Ledgers must come from the same records (series[i] matches steps[i-1]).
void write_step_csv(std::ostream& os, const RunReport& report, const std::vector<EnergyTrace>& ledgers = {});

/// Columns lambda, threshold, row_frequency, run_frequency, bound.
void write_tail_csv(std::ostream& os, const TailTable& table);

/// One JSON object per step: k, objective, frozen_count, G_k, and row_snapshot
/// on the steps that carry one.
void write_step_jsonl(std::ostream& os, const RunReport& report);

}  // namespace rwdisc
