#include "rwdisc/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <sstream>

#include "rwdisc/errors.hpp"
#include "rwdisc/komlos.hpp"
#include "rwdisc/rng.hpp"

namespace rwdisc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

GeneratedSetSystem gen_set_system(int n, int t, int min_size, int max_size, std::uint64_t seed) {
    if (n < 1) throw InputError("gen_set_system: n must be positive");
    if (t < 0) throw InputError("gen_set_system: t must be non-negative");
    if (min_size < 1 || min_size > max_size) throw InputError("gen_set_system: need 1 <= min_size <= max_size");
    if (max_size > n) throw InputError("gen_set_system: set size exceeds n");

    SeqRng rng(seed);
    std::vector<int> degree(static_cast<std::size_t>(n), 0);
    std::vector<std::vector<int>> sets;
    for (;;) {
        std::vector<int> open;
        for (int i = 0; i < n; ++i)
            if (degree[i] < t) open.push_back(i);
        if (static_cast<int>(open.size()) < min_size) break;
        const int drawn = min_size + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_size - min_size + 1)));
        const int size = std::min(drawn, static_cast<int>(open.size()));
        rng.shuffle(open);
        std::vector<int> s(open.begin(), open.begin() + size);
        std::sort(s.begin(), s.end());
        for (int i : s) ++degree[i];
        sets.push_back(std::move(s));
    }
    GeneratedSetSystem out{SetSystemInstance::make(n, std::move(sets)), false};
    out.degree_attained = t > 0 && out.instance.t == t;
    return out;
}

MatrixInstance gen_komlos_matrix(int m, int n, double density, std::uint64_t seed, EntryDistribution dist) {
    if (m < 1 || n < 0) throw InputError("gen_komlos_matrix: need m >= 1 and n >= 0");
    if (!(density > 0.0 && density <= 1.0)) throw InputError("gen_komlos_matrix: density must lie in (0, 1]");
    SeqRng rng(seed);
    MatrixXd b = MatrixXd::Zero(m, n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < m; ++i) {
            if (density < 1.0 && !(rng.uniform() < density)) continue;
            if (dist == EntryDistribution::Sign) {
                b(i, j) = rng.sign();
            } else {
                const double u1 = 1.0 - rng.uniform();  // (0, 1]
                const double u2 = rng.uniform();
                b(i, j) = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
            }
        }
        const double nrm = b.col(j).norm();
        if (nrm > 0.0) b.col(j) /= nrm;
    }
    return MatrixInstance::make(std::move(b));
}

// ---- instance files --------------------------------------------------------

json instance_to_json(const Instance& instance, const json& meta) {
    json doc;
    if (const auto* s = std::get_if<SetSystemInstance>(&instance)) {
        doc["kind"] = "set_system";
        doc["n"] = s->n;
        doc["sets"] = s->sets;
    } else {
        const auto& m = std::get<MatrixInstance>(instance);
        doc["kind"] = "matrix";
        doc["n"] = m.cols();
        json rows = json::array();
        for (int i = 0; i < m.rows(); ++i) {
            json row = json::array();
            for (int j = 0; j < m.cols(); ++j) row.push_back(m.b(i, j));
            rows.push_back(std::move(row));
        }
        doc["rows"] = std::move(rows);
    }
    doc["meta"] = meta.is_null() ? json::object() : meta;
    return doc;
}

InstanceFile instance_from_json(const json& doc) {
    try {
        if (!doc.is_object()) throw InputError("instance document must be a JSON object");
        const std::string kind = doc.at("kind").get<std::string>();
        const json& nj = doc.at("n");
        if (!nj.is_number_integer() || nj.get<long long>() < 0) throw InputError("'n' must be a non-negative integer");
        const int n = nj.get<int>();
        InstanceFile out;
        if (doc.contains("meta")) out.meta = doc.at("meta");
        if (kind == "set_system") {
            std::vector<std::vector<int>> sets;
            for (const auto& s : doc.at("sets")) {
                std::vector<int> set;
                for (const auto& e : s) {
                    if (!e.is_number_integer()) throw InputError("set entries must be integers");
                    set.push_back(e.get<int>());
                }
                sets.push_back(std::move(set));
            }
            out.instance = SetSystemInstance::make(n, std::move(sets));
        } else if (kind == "matrix") {
            const json& rows = doc.at("rows");
            if (!rows.is_array()) throw InputError("'rows' must be an array");
            MatrixXd b(static_cast<Eigen::Index>(rows.size()), n);
            for (std::size_t i = 0; i < rows.size(); ++i) {
                if (!rows[i].is_array() || rows[i].size() != static_cast<std::size_t>(n))
                    throw InputError("matrix row " + std::to_string(i) + " does not have n entries");
                for (int j = 0; j < n; ++j) {
                    if (!rows[i][j].is_number()) throw InputError("matrix entries must be numbers");
                    b(static_cast<Eigen::Index>(i), j) = rows[i][j].get<double>();
                }
            }
            if (!b.allFinite()) throw InputError("matrix entries must be finite");
            out.instance = MatrixInstance::make(std::move(b), kLoadNormSlack);
        } else {
            throw InputError("unknown instance kind '" + kind + "'");
        }
        return out;
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed instance document: ") + e.what());
    }
}

void save_json(const std::string& path, const json& doc) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write '" + path + "'");
    out << doc.dump(2) << '\n';
}

json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot read '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw InputError("'" + path + "' is not valid JSON: " + e.what());
    }
}

// ---- reports ---------------------------------------------------------------

json params_to_json(const WalkParams& p) {
    return json{{"mode", to_string(p.mode)},        {"gamma", p.gamma},
                {"t_max", p.t_max},                 {"a", p.a},
                {"freeze_threshold", p.freeze_threshold}, {"seed", p.seed},
                {"tmax_extension", p.tmax_extension}};
}

WalkParams params_from_json(const json& doc) {
    try {
        WalkParams p;
        p.mode = mode_from_string(doc.at("mode").get<std::string>());
        p.gamma = doc.at("gamma").get<double>();
        p.t_max = doc.at("t_max").get<long long>();
        p.a = doc.at("a").get<double>();
        p.freeze_threshold = doc.at("freeze_threshold").get<double>();
        p.seed = doc.at("seed").get<std::uint64_t>();
        p.tmax_extension = doc.at("tmax_extension").get<double>();
        p.validate();
        return p;
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed parameter block: ") + e.what());
    }
}

namespace {

json vec_to_json(const VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

json coloring_to_json(const VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i] > 0.0 ? 1 : -1);
    return out;
}

}  // namespace

json report_to_json(const Instance& instance, const RunReport& r) {
    const int n = element_count(instance);
    const double ln_n = std::log(std::max(2.0, static_cast<double>(n)));
    json doc;
    doc["kind"] = "report";
    json inst{{"kind", setting_of(instance) == Setting::BeckFiala ? "set_system" : "matrix"},
              {"n", n},
              {"rows", row_count(instance)}};
    json bounds;
    if (const auto* s = std::get_if<SetSystemInstance>(&instance)) {
        inst["t"] = s->t;
        const double scale = std::sqrt(s->t * ln_n);
        bounds["hard_cap"] = 2.0 * r.params.a * s->t + 1.0;
        bounds["within_hard_cap"] = r.max_discrepancy <= 2.0 * r.params.a * s->t + 1.0 + 1e-3;
        bounds["sqrt_t_ln_n"] = scale;
        bounds["c"] = scale > 0.0 ? json(r.max_discrepancy / scale) : json(nullptr);
    } else {
        const double scale = std::sqrt(ln_n);
        bounds["sqrt_ln_n"] = scale;
        bounds["c"] = r.max_discrepancy / scale;
    }
    doc["instance"] = std::move(inst);
    doc["params"] = params_to_json(r.params);
    doc["final_coloring"] = coloring_to_json(r.final_coloring);
    doc["per_row_discrepancy"] = vec_to_json(r.per_row_discrepancy);
    doc["max_discrepancy"] = r.max_discrepancy;
    doc["steps"] = r.steps_taken;
    doc["alive_at_end"] = r.alive_at_end_of_walk;
    doc["extended"] = r.extended;
    doc["forced_rounding"] = r.forced_rounding;
    doc["stats"] = {{"min_objective_ratio", r.min_objective_ratio},
                    {"max_big_row_increment", r.max_big_row_increment},
                    {"splitting_steps", r.splitting_steps}};
    doc["bounds"] = std::move(bounds);
    if (r.komlos) {
        const auto& k = *r.komlos;
        doc["komlos"] = {{"discarded_rows", k.discarded_rows},
                         {"l1_threshold", k.l1_threshold},
                         {"lambda", k.lambda},
                         {"truncation_threshold", k.truncation_threshold},
                         {"truncated_discrepancy", vec_to_json(k.truncated_discrepancy)}};
    }
    doc["timing"] = {{"seconds", r.seconds}};
    return doc;
}

json strip_timing(json doc) {
    if (doc.is_object()) {
        doc.erase("timing");
        for (auto& [key, value] : doc.items()) value = strip_timing(std::move(value));
    } else if (doc.is_array()) {
        for (auto& value : doc) value = strip_timing(std::move(value));
    }
    return doc;
}

VerifyResult verify_report(const Instance& instance, const json& report, double tol) {
    VerifyResult res;
    auto fail = [&](std::string msg) {
        res.ok = false;
        res.problems.push_back(std::move(msg));
    };
    try {
        const int n = element_count(instance);
        const json& col = report.at("final_coloring");
        if (!col.is_array() || col.size() != static_cast<std::size_t>(n)) {
            fail("final_coloring has the wrong length");
            return res;
        }
        VectorXd x(n);
        for (int i = 0; i < n; ++i) {
            const double v = col[i].get<double>();
            if (v != 1.0 && v != -1.0) fail("final_coloring[" + std::to_string(i) + "] is not +-1");
            x[i] = v;
        }
        const Discrepancy disc = discrepancy(instance, x);
        const json& per_row = report.at("per_row_discrepancy");
        if (per_row.size() != static_cast<std::size_t>(disc.per_row.size())) {
            fail("per_row_discrepancy has the wrong length");
        } else {
            for (std::size_t j = 0; j < per_row.size(); ++j) {
                const double got = per_row[j].get<double>();
                if (std::abs(got - disc.per_row[static_cast<Eigen::Index>(j)]) > tol)
                    fail("row " + std::to_string(j) + " discrepancy mismatch");
            }
        }
        const double max_field = report.at("max_discrepancy").get<double>();
        if (std::abs(max_field - disc.max_abs) > tol) fail("max_discrepancy does not match the coloring");
        double max_listed = 0.0;
        for (const auto& v : per_row) max_listed = std::max(max_listed, std::abs(v.get<double>()));
        if (std::abs(max_field - max_listed) > tol) fail("max_discrepancy is not the max of per_row_discrepancy");

        const WalkParams params = params_from_json(report.at("params"));
        if (const auto* s = std::get_if<SetSystemInstance>(&instance)) {
            if (disc.max_abs > 2.0 * params.a * s->t + 1.0 + 1e-3) fail("discrepancy exceeds 2at + 1");
        }
        if (const auto* m = std::get_if<MatrixInstance>(&instance); m && report.contains("komlos")) {
            const json& k = report.at("komlos");
            const double thr = k.at("truncation_threshold").get<double>();
            const json& tr = k.at("truncated_discrepancy");
            if (tr.size() != static_cast<std::size_t>(m->rows())) {
                fail("truncated_discrepancy has the wrong length");
            } else {
                for (int j = 0; j < m->rows(); ++j) {
                    const TruncationPrefix p = prefix_at(m->b.row(j).transpose(), thr, params.a, j);
                    if (std::abs(tr[j].get<double>() - truncated_discrepancy(*m, x, p)) > tol)
                        fail("row " + std::to_string(j) + " truncated discrepancy mismatch");
                }
            }
        }
    } catch (const json::exception& e) {
        fail(std::string("malformed report: ") + e.what());
    }
    return res;
}

json residuals_to_json(const ResidualReport& r) {
    json v = json::array();
    for (const auto& c : r.violations) v.push_back({{"name", c.name}, {"value", c.value}, {"limit", c.limit}});
    return json{{"max_equality", r.max_equality},
                {"max_equality_action", r.max_equality_action},
                {"min_pd_slack", std::isfinite(r.min_pd_slack) ? json(r.min_pd_slack) : json(nullptr)},
                {"max_diag_overflow", std::isfinite(r.max_diag_overflow) ? json(r.max_diag_overflow) : json(nullptr)},
                {"min_eigenvalue", r.min_eigenvalue},
                {"max_factor_error", r.max_factor_error},
                {"objective", r.objective},
                {"objective_floor", r.objective_floor},
                {"pass", r.pass()},
                {"violations", std::move(v)}};
}

json certificate_to_json(const CertificateReport& c) {
    return json{{"d", c.d},
                {"a", c.a},
                {"equality_count", c.equality_count},
                {"equality_rank", c.equality_rank},
                {"count_ok", c.count_ok},
                {"objective", c.objective},
                {"objective_floor", c.objective_floor},
                {"objective_ok", c.objective_ok},
                {"w0_dim", c.w0_dim},
                {"c_dim", c.c_dim},
                {"w_dim", c.w_dim},
                {"dimension_ok", c.dimension_ok},
                {"restricted_max_eigenvalue",
                 std::isfinite(c.restricted_max_eigenvalue) ? json(c.restricted_max_eigenvalue) : json(nullptr)},
                {"nsd_ok", c.nsd_ok},
                {"dual_objective", c.dual_objective},
                {"dual_feasible", c.dual_feasible},
                {"projected_trace", c.projected_trace},
                {"projected_trace_ok", c.projected_trace_ok},
                {"weak_duality_ok", c.weak_duality_ok},
                {"pass", c.pass()}};
}

json tail_to_json(const TailTable& table) {
    json rows = json::array();
    for (const auto& r : table.rows)
        rows.push_back({{"lambda", r.lambda},
                        {"threshold", r.threshold},
                        {"row_frequency", r.row_frequency},
                        {"run_frequency", r.run_frequency},
                        {"bound", r.bound}});
    return json{{"kind", "tail"},
                {"setting", table.setting == Setting::BeckFiala ? "set_system" : "matrix"},
                {"runs", table.runs},
                {"median_max", table.median_max},
                {"p90_max", table.p90_max},
                {"rows", std::move(rows)}};
}

// ---- CSV -------------------------------------------------------------------

void write_step_csv(std::ostream& os, const RunReport& report, const std::vector<EnergyTrace>& ledgers) {
    for (const auto& l : ledgers)
        if (l.series.size() != report.steps.size() + 1)
            throw PreconditionError("write_step_csv: ledger length does not match the step records");
    std::ostringstream line;
    line << std::setprecision(17);
    line << "k,objective,G_k,frozen_count";
    for (const auto& l : ledgers) {
        const std::string j = std::to_string(l.row);
        line << ",D_" << j << ",E_" << j << ",Q_" << j << ",L_" << j << ",Qp_" << j << ",Z_" << j;
    }
    line << '\n';
    for (std::size_t s = 0; s < report.steps.size(); ++s) {
        const StepRecord& rec = report.steps[s];
        line << rec.k << ',' << rec.objective << ',' << rec.potential_after << ',' << rec.frozen_this_step.size();
        for (const auto& l : ledgers) {
            const EnergyPoint& p = l.series[s + 1];
            line << ',' << p.D << ',' << p.E << ',' << p.Q << ',' << p.L << ',' << p.Q_prime << ',' << p.Z;
        }
        line << '\n';
    }
    os << line.str();
}

void write_tail_csv(std::ostream& os, const TailTable& table) {
    std::ostringstream line;
    line << std::setprecision(17) << "lambda,threshold,row_frequency,run_frequency,bound\n";
    for (const auto& r : table.rows)
        line << r.lambda << ',' << r.threshold << ',' << r.row_frequency << ',' << r.run_frequency << ',' << r.bound
             << '\n';
    os << line.str();
}

void write_step_jsonl(std::ostream& os, const RunReport& report) {
    std::ostringstream out;
    for (const StepRecord& rec : report.steps) {
        json line{{"k", rec.k},
                  {"objective", rec.objective},
                  {"frozen_count", rec.frozen_this_step.size()},
                  {"G_k", rec.potential_after}};
        if (rec.row_snapshot.size() > 0) line["row_snapshot"] = vec_to_json(rec.row_snapshot);
        out << line.dump() << '\n';
    }
    os << out.str();
}

}  // namespace rwdisc
