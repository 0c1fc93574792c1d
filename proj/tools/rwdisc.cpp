// Command-line front end: instance generation, walks, baselines, report
// verification, seed sweeps and certificate checks.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "rwdisc/analysis.hpp"
#include "rwdisc/certificates.hpp"
#include "rwdisc/errors.hpp"
#include "rwdisc/io.hpp"
#include "rwdisc/oracle.hpp"
#include "rwdisc/rng.hpp"
#include "rwdisc/walk.hpp"

using namespace rwdisc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitViolation = 1;
constexpr int kExitInput = 2;

struct WalkFlags {
    std::string mode = "practical";
    std::optional<double> gamma;
    std::optional<double> a;
    std::optional<long long> t_max;
    std::optional<double> tmax_extension;
    std::uint64_t seed = 1;
    std::string trace = "none";
    double lambda = 0.0;

    void attach(CLI::App* app) {
        app->add_option("--mode", mode, "paper or practical")->check(CLI::IsMember({"paper", "practical"}));
        app->add_option("--gamma", gamma, "step size (t_max is rederived unless --t-max is given)");
        app->add_option("--a", a, "big-row threshold factor");
        app->add_option("--t-max", t_max, "step budget");
        app->add_option("--tmax-extension", tmax_extension, "practical-mode cap multiplier");
        app->add_option("--seed", seed, "walk seed");
        app->add_option("--trace", trace, "none, scalar or full")->check(CLI::IsMember({"none", "scalar", "full"}));
        app->add_option("--lambda", lambda, "Komlós report threshold (default 8 sqrt(ln n))");
    }

    WalkParams params(const Instance& instance, std::uint64_t run_seed) const {
        const Mode m = mode_from_string(mode);
        WalkParams p = m == Mode::PaperFaithful ? WalkParams::paper(instance, run_seed)
                                                : WalkParams::practical(instance, run_seed);
        const double n = std::max(2.0, static_cast<double>(element_count(instance)));
        if (a) p.a = *a;
        if (gamma) {
            p.gamma = *gamma;
            const double steps = m == Mode::PaperFaithful ? 12.0 / (p.gamma * p.gamma) * std::log(n)
                                                          : 3.0 / (p.gamma * p.gamma) * std::log(2.0 * n);
            p.t_max = static_cast<long long>(std::min(9.0e18, std::ceil(steps)));
        }
        if (t_max) p.t_max = *t_max;
        if (tmax_extension) p.tmax_extension = *tmax_extension;
        p.validate();
        return p;
    }

    WalkOptions options() const {
        WalkOptions o;
        o.trace = trace_level_from_string(trace);
        o.report_lambda = lambda;
        return o;
    }
};

void emit(const json& doc, const std::string& path) {
    if (path.empty() || path == "-")
        std::cout << doc.dump(2) << '\n';
    else
        save_json(path, doc);
}

Instance load_instance_file(const std::string& path) { return instance_from_json(load_json(path)).instance; }

// ---- subcommands -----------------------------------------------------------

struct GenCmd {
    std::string kind = "set_system";
    int n = 32, t = 4, min_size = 4, max_size = 16, m = 48;
    double density = 1.0;
    std::string dist = "sign";
    std::uint64_t seed = 1;
    std::string out;

    int operator()() const {
        json meta{{"seed", seed}, {"generator", kind == "set_system" ? "gen_set_system" : "gen_komlos_matrix"}};
        if (kind == "set_system") {
            const auto g = gen_set_system(n, t, min_size, max_size, seed);
            meta["params"] = {{"n", n}, {"t", t}, {"min_size", min_size}, {"max_size", max_size},
                              {"degree_attained", g.degree_attained}};
            emit(instance_to_json(g.instance, meta), out);
        } else {
            const auto d = dist == "sign" ? EntryDistribution::Sign : EntryDistribution::Gaussian;
            meta["params"] = {{"m", m}, {"n", n}, {"density", density}, {"distribution", dist}};
            emit(instance_to_json(gen_komlos_matrix(m, n, density, seed, d), meta), out);
        }
        return kExitOk;
    }
};

struct RunCmd {
    std::string instance, out, csv, jsonl;
    long long snapshot_every = 0;
    std::vector<int> ledger_rows;
    WalkFlags flags;

    int operator()() const {
        const Instance inst = load_instance_file(instance);
        const WalkParams params = flags.params(inst, flags.seed);
        WalkOptions opts = flags.options();
        if (!ledger_rows.empty() && opts.trace != TraceLevel::Full)
            throw InputError("--ledger-rows needs --trace full");
        if ((!csv.empty() || !jsonl.empty()) && opts.trace == TraceLevel::None)
            throw InputError("--csv and --jsonl need --trace scalar or full");
        opts.snapshot_every = snapshot_every;
        const RunReport rep = run(inst, params, opts);
        emit(report_to_json(inst, rep), out);
        if (!csv.empty()) {
            std::vector<EnergyTrace> ledgers;
            std::optional<double> trunc;
            if (rep.komlos) trunc = rep.komlos->truncation_threshold;
            for (int j : ledger_rows) ledgers.push_back(energy_ledger(inst, rep.steps, params, j, trunc));
            std::ofstream os(csv);
            if (!os) throw InputError("cannot write '" + csv + "'");
            write_step_csv(os, rep, ledgers);
        }
        if (!jsonl.empty()) {
            std::ofstream os(jsonl);
            if (!os) throw InputError("cannot write '" + jsonl + "'");
            write_step_jsonl(os, rep);
        }
        return kExitOk;
    }
};

struct OracleCmd {
    std::string instance, out;
    unsigned threads = 0;

    int operator()() const {
        const Instance inst = load_instance_file(instance);
        const ColoringResult r = exact_min_discrepancy(inst, threads);
        json w = json::array();
        for (Eigen::Index i = 0; i < r.coloring.size(); ++i) w.push_back(r.coloring[i] > 0 ? 1 : -1);
        emit(json{{"kind", "oracle"}, {"value", r.value}, {"witness", w}}, out);
        return kExitOk;
    }
};

struct BaselineCmd {
    std::string instance, out, method = "random";
    std::uint64_t seed = 1;
    int trials = 1000;

    int operator()() const {
        const Instance inst = load_instance_file(instance);
        Eigen::VectorXd x;
        json doc{{"kind", "baseline"}, {"method", method}};
        if (method == "random") {
            x = random_coloring(inst, seed, trials).coloring;
            doc["seed"] = seed;
            doc["trials"] = trials;
        } else {
            const auto* s = std::get_if<SetSystemInstance>(&inst);
            if (!s) throw InputError("the beck-fiala baseline needs a set system");
            x = beck_fiala_rounding(*s);
        }
        const Discrepancy d = discrepancy(inst, x);
        json col = json::array();
        for (Eigen::Index i = 0; i < x.size(); ++i) col.push_back(x[i] > 0 ? 1 : -1);
        doc["final_coloring"] = col;
        doc["max_discrepancy"] = d.max_abs;
        emit(doc, out);
        if (method == "beck-fiala") {
            const int t = std::get<SetSystemInstance>(inst).t;
            if (d.max_abs > std::max(0, 2 * t - 1) + 1e-9) {
                std::cerr << "beck-fiala baseline exceeded 2t-1\n";
                return kExitViolation;
            }
        }
        return kExitOk;
    }
};

struct VerifyCmd {
    std::string instance, report;

    int operator()() const {
        const Instance inst = load_instance_file(instance);
        const VerifyResult v = verify_report(inst, load_json(report));
        for (const auto& p : v.problems) std::cerr << "verify: " << p << '\n';
        std::cout << (v.ok ? "ok" : "FAILED") << '\n';
        return v.ok ? kExitOk : kExitViolation;
    }
};

struct BenchCmd {
    std::string instance, out, csv;
    int seeds = 20;
    std::uint64_t first_seed = 1;
    unsigned threads = 0;
    std::vector<double> lambda_grid{0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0};
    WalkFlags flags;

    int operator()() const {
        if (seeds < 2) throw InputError("bench needs at least two seeds");
        const Instance inst = load_instance_file(instance);
        WalkOptions opts = flags.options();
        opts.trace = TraceLevel::None;
        std::vector<RunReport> reports(static_cast<std::size_t>(seeds));
        std::vector<std::string> errors(static_cast<std::size_t>(seeds));
        std::atomic<int> next{0};
        auto worker = [&] {
            for (int s = next++; s < seeds; s = next++) {
                try {
                    reports[s] = run(inst, flags.params(inst, first_seed + static_cast<std::uint64_t>(s)), opts);
                } catch (const std::exception& e) {
                    errors[s] = e.what();
                }
            }
        };
        unsigned nt = threads ? threads : std::max(1U, std::thread::hardware_concurrency());
        nt = std::min<unsigned>(nt, static_cast<unsigned>(seeds));
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < nt; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
        for (int s = 0; s < seeds; ++s)
            if (!errors[s].empty()) throw SolverError("seed " + std::to_string(first_seed + s) + ": " + errors[s]);

        const Setting setting = setting_of(inst);
        const int t = setting == Setting::BeckFiala ? std::get<SetSystemInstance>(inst).t : 0;
        const TailTable table = tail_estimate(reports, lambda_grid, setting, t, reports.front().params.a);
        json doc = tail_to_json(table);
        json runs = json::array();
        for (const auto& r : reports)
            runs.push_back({{"seed", r.seed}, {"max_discrepancy", r.max_discrepancy}, {"steps", r.steps_taken},
                            {"forced_rounding", r.forced_rounding}});
        doc["per_seed"] = std::move(runs);
        emit(doc, out);
        if (!csv.empty()) {
            std::ofstream os(csv);
            if (!os) throw InputError("cannot write '" + csv + "'");
            write_tail_csv(os, table);
        }
        return kExitOk;
    }
};

struct CertCmd {
    std::string instance, out;
    int count = 100;
    int max_n = 40;
    std::uint64_t seed = 1;
    long long max_steps = 200;
    WalkFlags flags;

    // Random unit-column matrices and random multiplier families.
    int random_suite() const {
        SeqRng rng(seed);
        int col_fail = 0, nsd_fail = 0;
        for (int c = 0; c < count; ++c) {
            const int n = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_n)));
            const int h = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(2 * max_n)));
            const MatrixInstance m = gen_komlos_matrix(h, n, 0.2 + 0.8 * rng.uniform(), rng.next(),
                                                       EntryDistribution::Gaussian);
            const Subspace w = column_subspace(m.b);
            const Eigen::MatrixXd mw = m.b * w.basis;
            const Eigen::VectorXd s2 = squared_singular_values(m.b);
            bool ok = 2 * w.dim() >= n && s2.sum() <= n + 1e-8;
            if (w.dim() > 0) {
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mw.transpose() * mw, Eigen::EigenvaluesOnly);
                ok = ok && es.eigenvalues().maxCoeff() <= 2.0 + 1e-8;
            }
            col_fail += ok ? 0 : 1;

            std::vector<Eigen::VectorXd> vecs;
            std::vector<double> beta;
            const int k = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(2 * n)));
            for (int q = 0; q < k; ++q) {
                Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
                for (int i = 0; i < n; ++i)
                    if (rng.uniform() < 0.5) v[i] = rng.uniform() * 2.0 - 1.0;
                vecs.push_back(v);
                beta.push_back(rng.uniform() * 3.0);
            }
            const Subspace w0 = nsd_subspace(vecs, beta, n);
            const Eigen::MatrixXd b = nsd_operator(vecs, beta, n);
            const double bn = b.norm();
            const bool nsd_ok = 2 * w0.dim() >= n && (w0.dim() == 0 || max_restricted_eigenvalue(w0, b) <= 1e-8 * bn);
            nsd_fail += nsd_ok ? 0 : 1;
        }
        emit(json{{"kind", "certificates"}, {"count", count}, {"column_failures", col_fail},
                  {"nsd_failures", nsd_fail}},
             out);
        return col_fail + nsd_fail == 0 ? kExitOk : kExitViolation;
    }

    // Certifies the per-step problems of a walk on a stored instance.
    int walk_suite() const {
        const Instance inst = load_instance_file(instance);
        WalkParams params = flags.params(inst, flags.seed);
        WalkOptions opts = flags.options();
        opts.trace = TraceLevel::None;
        long long checked = 0, failed = 0;
        json failures = json::array();
        opts.observer = [&](const StepContext& ctx) {
            if (checked >= max_steps) return;
            ++checked;
            const CertificateReport c = dual_floor_certificate(ctx.problem, ctx.solution);
            if (!c.pass()) {
                ++failed;
                json f = certificate_to_json(c);
                f["k"] = ctx.record.k;
                failures.push_back(std::move(f));
            }
        };
        run(inst, params, opts);
        emit(json{{"kind", "certificates"}, {"steps_checked", checked}, {"failed", failed}, {"failures", failures}},
             out);
        return failed == 0 ? kExitOk : kExitViolation;
    }

    int operator()() const { return instance.empty() ? random_suite() : walk_suite(); }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Random-walk discrepancy minimization toolkit"};
    app.require_subcommand(1);

    GenCmd gen;
    auto* g = app.add_subcommand("gen", "generate an instance file");
    g->add_option("--kind", gen.kind, "set_system or matrix")->check(CLI::IsMember({"set_system", "matrix"}));
    g->add_option("--n", gen.n, "elements / columns");
    g->add_option("--t", gen.t, "degree bound");
    g->add_option("--min-size", gen.min_size);
    g->add_option("--max-size", gen.max_size);
    g->add_option("--m", gen.m, "matrix rows");
    g->add_option("--density", gen.density);
    g->add_option("--dist", gen.dist, "sign or gaussian")->check(CLI::IsMember({"sign", "gaussian"}));
    g->add_option("--seed", gen.seed);
    g->add_option("-o,--out", gen.out, "output file (stdout when omitted)");

    RunCmd runc;
    auto* r = app.add_subcommand("run", "walk on an instance and emit a report");
    r->add_option("--instance", runc.instance)->required();
    r->add_option("-o,--out", runc.out);
    r->add_option("--csv", runc.csv, "step trace CSV");
    r->add_option("--ledger-rows", runc.ledger_rows, "rows whose energy ledger joins the CSV");
    r->add_option("--jsonl", runc.jsonl, "step stream, one JSON object per line");
    r->add_option("--snapshot-every", runc.snapshot_every, "per-row snapshot period in the step stream");
    runc.flags.attach(r);

    OracleCmd orc;
    auto* o = app.add_subcommand("oracle", "exact minimum discrepancy (n <= 24)");
    o->add_option("--instance", orc.instance)->required();
    o->add_option("--threads", orc.threads);
    o->add_option("-o,--out", orc.out);

    BaselineCmd base;
    auto* b = app.add_subcommand("baseline", "random or beck-fiala coloring");
    b->add_option("--instance", base.instance)->required();
    b->add_option("--method", base.method)->check(CLI::IsMember({"random", "beck-fiala"}));
    b->add_option("--seed", base.seed);
    b->add_option("--trials", base.trials);
    b->add_option("-o,--out", base.out);

    VerifyCmd ver;
    auto* v = app.add_subcommand("verify", "recheck a report against its instance");
    v->add_option("--instance", ver.instance)->required();
    v->add_option("--report", ver.report)->required();

    BenchCmd bench;
    auto* be = app.add_subcommand("bench", "seed sweep with tail table");
    be->add_option("--instance", bench.instance)->required();
    be->add_option("--seeds", bench.seeds);
    be->add_option("--first-seed", bench.first_seed);
    be->add_option("--threads", bench.threads);
    be->add_option("--lambda-grid", bench.lambda_grid);
    be->add_option("-o,--out", bench.out);
    be->add_option("--csv", bench.csv);
    bench.flags.attach(be);

    CertCmd cert;
    auto* c = app.add_subcommand("cert", "subspace and dual certificate checks");
    c->add_option("--instance", cert.instance, "certify every step of a walk on this instance");
    c->add_option("--count", cert.count);
    c->add_option("--max-n", cert.max_n);
    c->add_option("--suite-seed", cert.seed);
    c->add_option("--max-steps", cert.max_steps);
    c->add_option("-o,--out", cert.out);
    cert.flags.attach(c);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInput;
    }

    try {
        if (*g) return gen();
        if (*r) return runc();
        if (*o) return orc();
        if (*b) return base();
        if (*v) return ver();
        if (*be) return bench();
        if (*c) return cert();
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitViolation;
    }
    return kExitOk;
}
