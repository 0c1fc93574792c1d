#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "rwdisc/certificates.hpp"
#include "rwdisc/errors.hpp"
#include "rwdisc/io.hpp"
#include "rwdisc/walk.hpp"

using namespace rwdisc;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

VectorXd random_in(const Subspace& w, SeqRng& rng) {
    VectorXd c(w.dim());
    for (int i = 0; i < w.dim(); ++i) c[i] = rng.uniform() * 2.0 - 1.0;
    return w.basis * c;
}

double max_eig(const MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues()[es.eigenvalues().size() - 1];
}

bool orthonormal(const Subspace& w) {
    if (w.dim() == 0) return true;
    return (w.basis.transpose() * w.basis - MatrixXd::Identity(w.dim(), w.dim())).cwiseAbs().maxCoeff() <= 1e-10;
}

}  // namespace

TEST_SUITE("certificates") {

TEST_CASE("column subspace of the identity is everything") {
    const Subspace w = column_subspace(MatrixXd::Identity(6, 6));
    CHECK(w.dim() == 6);
    CHECK(orthonormal(w));
}

TEST_CASE("column subspace of a repeated unit column") {
    MatrixXd m = MatrixXd::Zero(3, 2);
    m(0, 0) = m(0, 1) = 1.0;
    // M'M = [[1,1],[1,1]]: trace 2, determinant 0, so sigma^2 in {0, 2}.
    const MatrixXd g = m.transpose() * m;
    const double tr = g.trace(), det = g.determinant();
    const double hi = 0.5 * (tr + std::sqrt(tr * tr - 4 * det));
    const double lo = 0.5 * (tr - std::sqrt(tr * tr - 4 * det));
    CHECK(hi == doctest::Approx(2.0));
    CHECK(lo == doctest::Approx(0.0));
    const VectorXd s2 = squared_singular_values(m);
    CHECK(s2[0] == doctest::Approx(lo).epsilon(1e-12));
    CHECK(s2[1] == doctest::Approx(hi).epsilon(1e-12));
    CHECK(column_subspace(m).dim() == 2);
}

TEST_CASE("column subspace on random unit-column matrices") {
    SeqRng rng(2);
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const int h = 5 + static_cast<int>(rng.below(30));
        const MatrixXd m = testutil::random_unit_columns(h, 20, seed);
        const Subspace w = column_subspace(m);
        CHECK(w.dim() >= 10);
        CHECK(orthonormal(w));
        for (int s = 0; s < 100; ++s) {
            const VectorXd y = random_in(w, rng);
            CHECK((m * y).squaredNorm() <= 2.0 * y.squaredNorm() * (1 + 1e-8));
        }
        // Singular-value budget equals the sum of squared column norms.
        CHECK(squared_singular_values(m).sum() == doctest::Approx(m.colwise().squaredNorm().sum()).epsilon(1e-10));
        CHECK(squared_singular_values(m).sum() <= 20 + 1e-8 * 20);
    }
    MatrixXd bad = MatrixXd::Identity(2, 2);
    bad(1, 0) = 0.1;
    CHECK_THROWS_AS(column_subspace(bad), InputError);
}

TEST_CASE("nsd subspace trivial cases") {
    std::vector<VectorXd> vs{VectorXd::Unit(5, 0), VectorXd::Ones(5)};
    const Subspace z = nsd_subspace(vs, {0.0, 0.0}, 5);
    CHECK(z.dim() == 5);
    CHECK(nsd_operator(vs, {0.0, 0.0}, 5).cwiseAbs().maxCoeff() == 0.0);

    std::vector<VectorXd> e1{VectorXd::Unit(5, 0)};
    const MatrixXd b = nsd_operator(e1, {1.0}, 5);
    CHECK(b(0, 0) == -1.0);
    const Subspace w = nsd_subspace(e1, {1.0}, 5);
    CHECK(w.dim() == 5);
    CHECK(max_restricted_eigenvalue(w, b) <= 1e-12);

    CHECK_THROWS_AS(nsd_subspace(e1, {-0.5}, 5), InputError);
    CHECK_THROWS_AS(nsd_operator(e1, {-0.5}, 5), InputError);
}

TEST_CASE("nsd subspace on set-system shaped vectors") {
    SeqRng rng(77);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 16;
        std::vector<VectorXd> vs;
        std::vector<double> beta;
        for (int s = 0; s < 8; ++s) {
            VectorXd ind = VectorXd::Zero(n), xs = VectorXd::Zero(n);
            for (int i = 0; i < n; ++i)
                if (rng.uniform() < 0.35) {
                    ind[i] = 1.0;
                    xs[i] = rng.uniform() * 2.0 - 1.0;
                }
            vs.push_back(ind);
            vs.push_back(xs);
            beta.push_back(rng.uniform());
            beta.push_back(rng.uniform());
        }
        const Subspace w = nsd_subspace(vs, beta, n);
        const MatrixXd b = nsd_operator(vs, beta, n);
        CHECK(w.dim() >= 8);
        CHECK(orthonormal(w));
        CHECK(max_restricted_eigenvalue(w, b) <= 1e-8 * b.norm());

        // B_k replaces the x_S diagonal weights x^2 by 1, which only lowers the form.
        MatrixXd bk = MatrixXd::Zero(n, n);
        for (std::size_t c = 0; c < vs.size(); ++c) {
            bk += beta[c] * vs[c] * vs[c].transpose();
            bk.diagonal() -= 2.0 * beta[c] * vs[c].cwiseAbs().cwiseSign();
        }
        for (int s = 0; s < 200; ++s) {
            VectorXd y = random_in(w, rng);
            y /= y.norm();
            CHECK(y.dot(b * y) <= 1e-8 * b.norm());
            CHECK(y.dot(bk * y) <= y.dot(b * y) + 1e-8);
        }
    }
}

TEST_CASE("intersection with the equality complement") {
    SeqRng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 12;
        std::vector<VectorXd> eq;
        const int c = static_cast<int>(rng.below(4));
        for (int q = 0; q < c; ++q) {
            VectorXd v(n);
            for (int i = 0; i < n; ++i) v[i] = rng.uniform() < 0.5 ? 1.0 : 0.0;
            eq.push_back(v);
        }
        std::vector<VectorXd> vs;
        std::vector<double> beta;
        for (int q = 0; q < 6; ++q) {
            VectorXd v(n);
            for (int i = 0; i < n; ++i) v[i] = rng.uniform() - 0.5;
            vs.push_back(v);
            beta.push_back(rng.uniform());
        }
        const Subspace w0 = nsd_subspace(vs, beta, n);
        const Subspace w1 = complement_of_span(eq, n);
        const Subspace w = intersect(w1, w0);
        const int c_dim = n - w1.dim();
        CHECK(c_dim <= c);
        CHECK(w.dim() >= w0.dim() - c_dim);
        CHECK(w.dim() == intersection_dimension(w1, w0));
        CHECK(orthonormal(w));
        for (const auto& v : eq)
            if (w.dim() > 0) CHECK((w.basis.transpose() * v).cwiseAbs().maxCoeff() <= 1e-9);
        if (w.dim() > 0) CHECK(((w0.projector() * w.basis) - w.basis).cwiseAbs().maxCoeff() <= 1e-8);
    }
}

TEST_CASE("dual floor certificate on a cap-only problem") {
    SdpProblem p;
    for (int i = 0; i < 9; ++i) p.alive_index.push_back(i);
    const SdpSolution s = solve(p);
    const CertificateReport c = dual_floor_certificate(p, s);
    CHECK(c.pass());
    CHECK(c.objective == doctest::Approx(9.0));
    CHECK(c.objective_floor == doctest::Approx(3.0));
    CHECK(c.w_dim == 9);
    CHECK(c.projected_trace == doctest::Approx(9.0));
}

TEST_CASE("equality count at the floor of d/a") {
    // d = 12, a = 6: two disjoint big blocks give floor(d/a) = 2 equalities.
    SdpProblem p;
    p.a = 6.0;
    for (int i = 0; i < 12; ++i) p.alive_index.push_back(i);
    VectorXd v1 = VectorXd::Zero(12), v2 = VectorXd::Zero(12);
    v1.head(6).setOnes();
    v2.tail(6).setOnes();
    p.equality_vectors = {v1, v2};
    p.equality_rows = {0, 1};
    const SdpSolution s = solve(p);
    const CertificateReport c = dual_floor_certificate(p, s);
    CHECK(c.equality_count == 2);
    CHECK(c.count_ok);
    CHECK(c.c_dim == 2);
    CHECK(c.w_dim == 10);
    CHECK(c.pass());
}

TEST_CASE("walk steps carry passing certificates") {
    const auto g = gen_set_system(18, 2, 3, 14, 3);
    WalkOptions opts;
    int checked = 0, failed = 0;
    opts.observer = [&](const StepContext& ctx) {
        if (ctx.record.k % 97 != 1) return;
        ++checked;
        if (!dual_floor_certificate(ctx.problem, ctx.solution).pass()) ++failed;
    };
    run(g.instance, WalkParams::practical(g.instance, 8), opts);
    CHECK(checked > 5);
    CHECK(failed == 0);

    const MatrixInstance m = gen_komlos_matrix(10, 12, 0.6, 4, EntryDistribution::Gaussian);
    checked = failed = 0;
    run(m, WalkParams::practical(m, 2), opts);
    CHECK(checked > 5);
    CHECK(failed == 0);
}

TEST_CASE("certificate serializes") {
    SdpProblem p;
    for (int i = 0; i < 3; ++i) p.alive_index.push_back(i);
    const json j = certificate_to_json(dual_floor_certificate(p, solve(p)));
    CHECK(j.at("pass").get<bool>());
    CHECK(j.at("d").get<int>() == 3);
}

}  // TEST_SUITE
