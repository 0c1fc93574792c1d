#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include "doctest.h"
#include "helpers.hpp"
#include "rwdisc/analysis.hpp"
#include "rwdisc/errors.hpp"
#include "rwdisc/io.hpp"

using namespace rwdisc;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / ("rwdisc_io_" + std::to_string(::getpid()));
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string tmp(const std::string& name) { return (scratch_dir() / name).string(); }

int cli(const std::string& args) {
    const std::string cmd = std::string(RWDISC_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("set-system generator") {
    const auto d = gen_set_system(8, 1, 2, 3, 4);
    CHECK(d.instance.t == 1);
    std::set<int> seen;
    for (const auto& s : d.instance.sets)
        for (int i : s) CHECK(seen.insert(i).second);

    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto g = gen_set_system(30, 4, 2, 10, seed);
        CHECK(max_degree(g.instance) <= 4);
        for (const auto& s : g.instance.sets) {
            CHECK(static_cast<int>(s.size()) >= 2);
            CHECK(static_cast<int>(s.size()) <= 10);
        }
        const auto again = gen_set_system(30, 4, 2, 10, seed);
        CHECK(again.instance.sets == g.instance.sets);
        if (g.degree_attained) CHECK(max_degree(g.instance) == 4);
    }
    CHECK(gen_set_system(5, 0, 1, 2, 1).instance.sets.empty());
    CHECK_THROWS_AS(gen_set_system(0, 1, 1, 1, 1), InputError);
    CHECK_THROWS_AS(gen_set_system(5, -1, 1, 2, 1), InputError);
    CHECK_THROWS_AS(gen_set_system(5, 1, 3, 2, 1), InputError);
    CHECK_THROWS_AS(gen_set_system(5, 1, 0, 2, 1), InputError);
    CHECK_THROWS_AS(gen_set_system(5, 1, 1, 6, 1), InputError);
}

TEST_CASE("komlos generator") {
    const MatrixInstance one = gen_komlos_matrix(1, 9, 1.0, 3);
    for (int i = 0; i < 9; ++i) CHECK(std::abs(one.b(0, i)) == 1.0);

    for (auto dist : {EntryDistribution::Sign, EntryDistribution::Gaussian}) {
        const MatrixInstance m = gen_komlos_matrix(20, 15, 0.3, 11, dist);
        for (int i = 0; i < 15; ++i) {
            const double norm = m.b.col(i).squaredNorm();
            CHECK(norm <= 1.0 + 1e-12);
            CHECK((norm == 0.0 || std::abs(norm - 1.0) <= 1e-12));
        }
        CHECK(gen_komlos_matrix(20, 15, 0.3, 11, dist).b == m.b);
        CHECK(gen_komlos_matrix(20, 15, 0.3, 12, dist).b != m.b);
    }
    CHECK_THROWS_AS(gen_komlos_matrix(3, 3, 0.0, 1), InputError);
    CHECK_THROWS_AS(gen_komlos_matrix(3, 3, 1.5, 1), InputError);
}

TEST_CASE("instance files round-trip exactly") {
    const auto g = gen_set_system(12, 3, 2, 6, 8);
    const json meta{{"seed", 8}};
    save_json(tmp("sets.json"), instance_to_json(g.instance, meta));
    const InstanceFile back = instance_from_json(load_json(tmp("sets.json")));
    CHECK(std::get<SetSystemInstance>(back.instance).sets == g.instance.sets);
    CHECK(back.meta == meta);

    const MatrixInstance m = gen_komlos_matrix(5, 7, 0.6, 2, EntryDistribution::Gaussian);
    save_json(tmp("mat.json"), instance_to_json(m));
    const InstanceFile mb = instance_from_json(load_json(tmp("mat.json")));
    CHECK(std::get<MatrixInstance>(mb.instance).b == m.b);
}

TEST_CASE("invalid instance documents are rejected") {
    CHECK_THROWS_AS(instance_from_json(json::parse(R"({"kind":"graph","n":2})")), InputError);
    CHECK_THROWS_AS(instance_from_json(json::parse(R"({"kind":"set_system","n":2,"sets":[[0,2]]})")), InputError);
    CHECK_THROWS_AS(instance_from_json(json::parse(R"({"kind":"set_system","n":-1,"sets":[]})")), InputError);
    CHECK_THROWS_AS(instance_from_json(json::parse(R"({"kind":"set_system","n":2})")), InputError);
    CHECK_THROWS_AS(instance_from_json(json::parse(R"({"kind":"matrix","n":2,"rows":[[1.0,0.0],[1.0,0.0]]})")),
                    InputError);
    CHECK_THROWS_AS(instance_from_json(json::parse(R"({"kind":"matrix","n":2,"rows":[[1.0]]})")), InputError);
    CHECK_THROWS_AS(load_json(tmp("missing.json")), InputError);
}

TEST_CASE("params round-trip") {
    const auto inst = testutil::sets(6, {{0, 1}});
    WalkParams p = WalkParams::practical(inst, 42);
    p.a = 4.5;
    const WalkParams q = params_from_json(params_to_json(p));
    CHECK(q.gamma == p.gamma);
    CHECK(q.t_max == p.t_max);
    CHECK(q.a == p.a);
    CHECK(q.seed == p.seed);
    CHECK(q.mode == p.mode);
    CHECK(q.freeze_threshold == p.freeze_threshold);
}

TEST_CASE("report verification") {
    const auto g = gen_set_system(14, 2, 2, 7, 3);
    const RunReport r = run(g.instance, WalkParams::practical(g.instance, 3));
    json doc = report_to_json(g.instance, r);
    CHECK(verify_report(g.instance, doc).ok);
    CHECK(doc.at("bounds").at("hard_cap").get<double>() == 2.0 * 6.0 * g.instance.t + 1.0);

    json bad = doc;
    bad["max_discrepancy"] = doc["max_discrepancy"].get<double>() + 1.0;
    CHECK_FALSE(verify_report(g.instance, bad).ok);
    bad = doc;
    bad["final_coloring"][0] = 0;
    CHECK_FALSE(verify_report(g.instance, bad).ok);
    bad = doc;
    bad["per_row_discrepancy"][0] = 99.0;
    CHECK_FALSE(verify_report(g.instance, bad).ok);

    const MatrixInstance m = gen_komlos_matrix(6, 8, 0.8, 1);
    const RunReport mr = run(m, WalkParams::practical(m, 1));
    const json mdoc = report_to_json(m, mr);
    CHECK(verify_report(m, mdoc).ok);
    CHECK(mdoc.contains("komlos"));
    CHECK(strip_timing(mdoc).contains("timing") == false);
}

TEST_CASE("step csv and jsonl") {
    const auto g = gen_set_system(10, 2, 2, 5, 6);
    WalkOptions opts;
    opts.trace = TraceLevel::Full;
    opts.snapshot_every = 5;
    const RunReport r = run(g.instance, WalkParams::practical(g.instance, 6), opts);
    const EnergyTrace l = energy_ledger(g.instance, r.steps, r.params, 0);
    std::ostringstream csv;
    write_step_csv(csv, r, {l});
    std::istringstream in(csv.str());
    std::string header;
    std::getline(in, header);
    CHECK(header == "k,objective,G_k,frozen_count,D_0,E_0,Q_0,L_0,Qp_0,Z_0");
    const std::string text = csv.str();
    const auto lines = std::count(text.begin(), text.end(), '\n');
    CHECK(lines == static_cast<long>(r.steps.size()) + 1);

    std::ostringstream js;
    write_step_jsonl(js, r);
    std::istringstream jin(js.str());
    std::string line;
    int count = 0, snaps = 0;
    while (std::getline(jin, line)) {
        const json j = json::parse(line);
        CHECK(j.contains("k"));
        if (j.contains("row_snapshot")) {
            ++snaps;
            CHECK(j.at("k").get<long long>() % 5 == 0);
        }
        ++count;
    }
    CHECK(count == static_cast<int>(r.steps.size()));
    CHECK(snaps == static_cast<int>(r.steps.size()) / 5);
}

}  // TEST_SUITE

TEST_SUITE("cli") {

TEST_CASE("gen, run and verify") {
    REQUIRE(cli("gen --kind set_system --n 16 --t 2 --min-size 2 --max-size 6 --seed 5 -o " + tmp("c_sets.json")) == 0);
    REQUIRE(cli("run --instance " + tmp("c_sets.json") + " --seed 2 -o " + tmp("c_r1.json")) == 0);
    REQUIRE(cli("run --instance " + tmp("c_sets.json") + " --seed 2 -o " + tmp("c_r2.json")) == 0);
    CHECK(strip_timing(load_json(tmp("c_r1.json"))) == strip_timing(load_json(tmp("c_r2.json"))));
    CHECK(cli("verify --instance " + tmp("c_sets.json") + " --report " + tmp("c_r1.json")) == 0);

    json tampered = load_json(tmp("c_r1.json"));
    tampered["max_discrepancy"] = tampered["max_discrepancy"].get<double>() + 0.5;
    save_json(tmp("c_bad.json"), tampered);
    CHECK(cli("verify --instance " + tmp("c_sets.json") + " --report " + tmp("c_bad.json")) == 1);
}

TEST_CASE("input errors exit with 2") {
    {
        std::ofstream bad(tmp("c_broken.json"));
        bad << R"({"kind":"set_system","n":3,"sets":[[0,5]]})";
    }
    CHECK(cli("run --instance " + tmp("c_broken.json")) == 2);
    CHECK(cli("run --instance " + tmp("does_not_exist.json")) == 2);
    CHECK(cli("run") == 2);
    CHECK(cli("frobnicate") == 2);
    CHECK(cli("gen --kind set_system --n 4 --t 1 --min-size 3 --max-size 2") == 2);
}

TEST_CASE("oracle, baselines and bench") {
    REQUIRE(cli("gen --kind set_system --n 10 --t 2 --min-size 2 --max-size 5 --seed 1 -o " + tmp("c_small.json")) == 0);
    CHECK(cli("oracle --instance " + tmp("c_small.json") + " -o " + tmp("c_orc.json")) == 0);
    CHECK(load_json(tmp("c_orc.json")).contains("value"));
    CHECK(cli("baseline --instance " + tmp("c_small.json") + " --method beck-fiala") == 0);
    CHECK(cli("baseline --instance " + tmp("c_small.json") + " --method random --trials 5") == 0);

    REQUIRE(cli("bench --instance " + tmp("c_small.json") + " --seeds 20 --threads 4 -o " + tmp("c_bench.json") +
                " --csv " + tmp("c_bench.csv")) == 0);
    const json b = load_json(tmp("c_bench.json"));
    CHECK(b.at("per_seed").size() == 20);
    CHECK(slurp(tmp("c_bench.csv")).rfind("lambda,threshold,row_frequency,run_frequency,bound", 0) == 0);
}

TEST_CASE("run side outputs and certificates") {
    REQUIRE(cli("gen --kind matrix --m 6 --n 8 --density 0.7 --seed 3 -o " + tmp("c_mat.json")) == 0);
    REQUIRE(cli("run --instance " + tmp("c_mat.json") + " --trace full --csv " + tmp("c_steps.csv") +
                " --ledger-rows 0 --jsonl " + tmp("c_steps.jsonl") + " --snapshot-every 10 -o " + tmp("c_mr.json")) == 0);
    CHECK(slurp(tmp("c_steps.csv")).rfind("k,objective,G_k,frozen_count,D_0", 0) == 0);
    CHECK(!slurp(tmp("c_steps.jsonl")).empty());
    CHECK(cli("verify --instance " + tmp("c_mat.json") + " --report " + tmp("c_mr.json")) == 0);
    CHECK(cli("cert --count 10 --max-n 12") == 0);
    CHECK(cli("cert --instance " + tmp("c_small.json") + " --max-steps 20") == 0);
}

}  // TEST_SUITE
