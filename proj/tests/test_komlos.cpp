#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "rwdisc/komlos.hpp"
#include "rwdisc/sdp.hpp"
#include "rwdisc/walk.hpp"

using namespace rwdisc;
using testutil::vec;

namespace {

std::vector<std::uint8_t> all_alive(int n) { return std::vector<std::uint8_t>(static_cast<std::size_t>(n), 1); }

}  // namespace

TEST_SUITE("komlos") {

TEST_CASE("prefixes of a sorted row") {
    const auto p = truncation_prefixes(vec({0.9, 0.3, 0.1}), all_alive(3), 6.0, 4);
    REQUIRE(p.size() == 3);
    CHECK(p[0].threshold == 0.1);
    CHECK(p[1].threshold == 0.3);
    CHECK(p[2].threshold == 0.9);
    CHECK(p[0].included == std::vector<int>{2});
    CHECK(p[1].included == std::vector<int>{2, 1});
    CHECK(p[2].included == std::vector<int>{2, 1, 0});
    CHECK(p[1].row == 4);
    CHECK(p[1].lambda_equivalent == doctest::Approx(24.0 / 0.3));

    CHECK(truncation_prefixes(vec({0.5, 0.5}), all_alive(2)).size() == 1);
    CHECK(truncation_prefixes(vec({0.5, -0.5}), all_alive(2)).size() == 1);
    CHECK(truncation_prefixes(vec({0.0, 0.0, 0.0}), all_alive(3)).empty());

    std::vector<std::uint8_t> alive{1, 0, 1};
    const auto q = truncation_prefixes(vec({0.9, 0.3, 0.1}), alive);
    REQUIRE(q.size() == 2);
    CHECK(q[1].included == std::vector<int>{2, 0});
}

TEST_CASE("prefixes nest and stay within the constraint budget") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const Eigen::MatrixXd b = testutil::random_unit_columns(6, 15, seed);
        SeqRng rng(seed);
        std::vector<std::uint8_t> alive(15);
        for (auto& a : alive) a = rng.uniform() < 0.7 ? 1 : 0;
        for (int j = 0; j < 6; ++j) {
            const auto p = truncation_prefixes(Eigen::VectorXd(b.row(j).transpose()), alive);
            CHECK(p.size() <= 15);
            for (std::size_t k = 1; k < p.size(); ++k) {
                CHECK(p[k - 1].threshold < p[k].threshold);
                // Each prefix extends the previous one in magnitude order.
                CHECK(std::equal(p[k - 1].included.begin(), p[k - 1].included.end(), p[k].included.begin()));
                std::vector<int> small = p[k - 1].included, big = p[k].included;
                std::sort(small.begin(), small.end());
                std::sort(big.begin(), big.end());
                CHECK(std::includes(big.begin(), big.end(), small.begin(), small.end()));
            }
        }
    }
}

TEST_CASE("row preprocessing by l1-norm") {
    // Oracle for the cut: sqrt(ln 4) from the series ln 4 = 2 ln 2.
    const double ln2 = 0.6931471805599453;
    const double cut = std::sqrt(2.0 * ln2);
    CHECK(cut == doctest::Approx(1.1774).epsilon(1e-4));

    Eigen::MatrixXd b(2, 4);
    b << 0.1, 0.1, 0.0, 0.0, 0.5, 0.5, 0.5, 0.5;
    const Preprocessed pre = preprocess(MatrixInstance::make(b));
    CHECK(pre.l1_threshold == doctest::Approx(cut).epsilon(1e-14));
    CHECK(pre.discarded_rows == std::vector<int>{0});
    CHECK(pre.kept_rows == std::vector<int>{1});
    CHECK(pre.kept.rows() == 1);
    CHECK(pre.surviving_row_bound == doctest::Approx(16.0 / (2.0 * ln2)));

    const Preprocessed zero = preprocess(MatrixInstance::make(Eigen::MatrixXd::Zero(3, 2)));
    CHECK(zero.discarded_rows == std::vector<int>{0, 1, 2});
    CHECK(zero.kept.rows() == 0);
}

TEST_CASE("large entries of an active row") {
    // Every entry is at most 1 and 4a/lambda = 1 here.
    CHECK(large_entry_l1(vec({0.9, 0.5, 1.0}), all_alive(3), 24.0) == 0.0);
    CHECK(large_entry_l1(vec({0.9, 0.9}), all_alive(2), 7.2) == 0.0);
    // lambda = 40 puts the cut at 0.6.
    CHECK(large_entry_l1(vec({0.9, -0.7, 0.5}), all_alive(3), 40.0) == doctest::Approx(1.6));

    // Any row with alive squared mass <= a keeps the large-entry l1 under lambda/4.
    SeqRng rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 4 + static_cast<int>(rng.below(60));
        Eigen::VectorXd row(n);
        for (int i = 0; i < n; ++i) row[i] = rng.uniform() * 2.0 - 1.0;
        std::vector<std::uint8_t> alive(static_cast<std::size_t>(n));
        double mass = 0.0;
        for (int i = 0; i < n; ++i) {
            alive[i] = rng.uniform() < 0.8 ? 1 : 0;
            if (alive[i]) mass += row[i] * row[i];
        }
        if (mass > 6.0) row *= std::sqrt(6.0 / mass);
        for (double lambda : {0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 24.0, 48.0, 100.0})
            CHECK(large_entry_l1(row, alive, lambda) <= lambda / 4.0 + 1e-12);
    }
}

TEST_CASE("truncated discrepancy") {
    Eigen::MatrixXd b(1, 2);
    b << 0.9, 0.3;
    const MatrixInstance inst = MatrixInstance::make(b);
    const Eigen::VectorXd x = vec({1, 1});
    CHECK(truncated_discrepancy(inst, x, prefix_at(b.row(0).transpose(), 0.3)) == doctest::Approx(0.3));
    CHECK(truncated_discrepancy(inst, x, prefix_at(b.row(0).transpose(), 0.05)) == 0.0);
    CHECK(truncated_discrepancy(inst, x, prefix_at(b.row(0).transpose(), 1.0)) == discrepancy(inst, x).per_row[0]);
}

TEST_CASE("full row splits into truncated part and large part") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const MatrixInstance inst = MatrixInstance::make(testutil::random_unit_columns(5, 12, seed));
        SeqRng rng(seed + 100);
        Eigen::VectorXd x(12);
        for (int i = 0; i < 12; ++i) x[i] = rng.uniform() * 2.0 - 1.0;
        for (int j = 0; j < 5; ++j) {
            const double c = 0.3;
            const TruncationPrefix p = prefix_at(inst.b.row(j).transpose(), c, 6.0, j);
            double large = 0.0;
            for (int i = 0; i < 12; ++i)
                if (std::abs(inst.b(j, i)) > c) large += inst.b(j, i) * x[i];
            CHECK(discrepancy(inst, x).per_row[j] ==
                  doctest::Approx(truncated_discrepancy(inst, x, p) + large).epsilon(1e-13));
        }
    }
}

TEST_CASE("orthogonality weights are dominated by the truncation threshold") {
    // sum b^4 |u|^2 <= c^2 sum b^2 |u|^2 on every prefix, and c^2 = 16a^2/lambda^2 <= 32a^2/lambda^2.
    SeqRng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const Eigen::MatrixXd b = testutil::random_unit_columns(3, 10, 1000 + trial);
        Eigen::VectorXd unorm(10);
        for (int i = 0; i < 10; ++i) unorm[i] = rng.uniform();
        const auto prefixes = truncation_prefixes(Eigen::VectorXd(b.row(0).transpose()), all_alive(10));
        for (const auto& p : prefixes) {
            double b4 = 0.0, b2 = 0.0;
            for (int i : p.included) {
                const double v = b(0, i) * b(0, i);
                b4 += v * v * unorm[i];
                b2 += v * unorm[i];
            }
            const double c = p.threshold;
            CHECK(b4 <= c * c * b2 * (1 + 1e-12));
            const double lambda = p.lambda_equivalent;
            CHECK(c * c == doctest::Approx(16.0 * 36.0 / (lambda * lambda)));
            CHECK(c * c <= 32.0 * 36.0 / (lambda * lambda));
        }
    }
}

TEST_CASE("per-row pd pair count stays within 2n") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const MatrixInstance inst = MatrixInstance::make(testutil::random_unit_columns(8, 14, seed));
        WalkState st = init_state(inst, WalkParams::practical(inst, seed));
        for (int i = 0; i < 14; ++i) st.x[i] = 0.1 * (i % 5);
        const SdpProblem p = build_sdp_komlos(inst, st, 6.0);
        std::vector<int> per_row(8, 0);
        for (const auto& pair : p.pd_pairs) ++per_row[pair.row];
        for (int c : per_row) CHECK(c <= 28);
    }
}

}  // TEST_SUITE
