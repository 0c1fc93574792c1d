#include "rwdisc/certificates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rwdisc/core.hpp"
#include "rwdisc/errors.hpp"

namespace rwdisc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Relative slack on the sigma^2 <= 2 cut, so exact ties survive rounding.
constexpr double kSigmaCutSlack = 1e-9;

MatrixXd orthonormalize(const MatrixXd& cols, double tol) {
    if (cols.cols() == 0) return MatrixXd(cols.rows(), 0);
    Eigen::JacobiSVD<MatrixXd> svd(cols, Eigen::ComputeThinU);
    const VectorXd& sv = svd.singularValues();
    Eigen::Index rank = 0;
    const double top = sv.size() ? sv[0] : 0.0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv[i] > tol * std::max(1.0, top)) ++rank;
    return svd.matrixU().leftCols(rank);
}

}  // namespace

VectorXd squared_singular_values(const MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(m.transpose() * m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseMax(0.0);
}

Subspace column_subspace(const MatrixXd& m) {
    for (Eigen::Index i = 0; i < m.cols(); ++i)
        if (m.col(i).squaredNorm() > 1.0 + kColumnNormSlack)
            throw InputError("column_subspace: column norm exceeds 1");
    const Eigen::Index n = m.cols();
    if (n == 0) return Subspace{MatrixXd(0, 0)};
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(m.transpose() * m);
    Eigen::Index keep = 0;
    while (keep < n && es.eigenvalues()[keep] <= 2.0 * (1.0 + kSigmaCutSlack)) ++keep;
    return Subspace{es.eigenvectors().leftCols(keep)};
}

MatrixXd nsd_operator(const std::vector<VectorXd>& vectors, const std::vector<double>& multipliers, int n) {
    if (vectors.size() != multipliers.size()) throw InputError("one multiplier per vector is required");
    MatrixXd b = MatrixXd::Zero(n, n);
    for (std::size_t c = 0; c < vectors.size(); ++c) {
        if (multipliers[c] < 0.0) throw InputError("multipliers must be non-negative");
        if (vectors[c].size() != n) throw InputError("vector length differs from n");
        b += multipliers[c] * vectors[c] * vectors[c].transpose();
        b.diagonal() -= 2.0 * multipliers[c] * vectors[c].cwiseAbs2();
    }
    return b;
}

Subspace nsd_subspace(const std::vector<VectorXd>& vectors, const std::vector<double>& multipliers, int n) {
    if (vectors.size() != multipliers.size()) throw InputError("one multiplier per vector is required");
    for (std::size_t c = 0; c < vectors.size(); ++c) {
        if (multipliers[c] < 0.0) throw InputError("multipliers must be non-negative");
        if (vectors[c].size() != n) throw InputError("vector length differs from n");
    }
    // Rows sqrt(beta_v) v; column norms give the diagonal scaling.
    MatrixXd m(static_cast<Eigen::Index>(vectors.size()), n);
    for (std::size_t c = 0; c < vectors.size(); ++c)
        m.row(static_cast<Eigen::Index>(c)) = std::sqrt(multipliers[c]) * vectors[c].transpose();
    VectorXd col_norm(n);
    std::vector<int> support, outside;
    for (int i = 0; i < n; ++i) {
        col_norm[i] = m.rows() ? m.col(i).norm() : 0.0;
        (col_norm[i] > 0.0 ? support : outside).push_back(i);
    }

    MatrixXd normalized(m.rows(), static_cast<Eigen::Index>(support.size()));
    for (std::size_t s = 0; s < support.size(); ++s) normalized.col(s) = m.col(support[s]) / col_norm[support[s]];
    const Subspace inner = column_subspace(normalized);

    MatrixXd span(n, inner.dim() + static_cast<Eigen::Index>(outside.size()));
    span.setZero();
    for (int c = 0; c < inner.dim(); ++c)
        for (std::size_t s = 0; s < support.size(); ++s)
            span(support[s], c) = inner.basis(static_cast<Eigen::Index>(s), c) / col_norm[support[s]];
    for (std::size_t o = 0; o < outside.size(); ++o) span(outside[o], inner.dim() + static_cast<Eigen::Index>(o)) = 1.0;
    // D^{-1} is invertible on the support, so the mapped columns stay independent.
    return Subspace{orthonormalize(span, 1e-14)};
}

Subspace complement_of_span(const std::vector<VectorXd>& vectors, int n, double tol) {
    if (vectors.empty()) return Subspace{MatrixXd::Identity(n, n)};
    MatrixXd v(n, static_cast<Eigen::Index>(vectors.size()));
    for (std::size_t c = 0; c < vectors.size(); ++c) {
        if (vectors[c].size() != n) throw InputError("vector length differs from n");
        const double nrm = vectors[c].norm();
        v.col(c) = nrm > 0.0 ? VectorXd(vectors[c] / nrm) : vectors[c];
    }
    Eigen::JacobiSVD<MatrixXd> svd(v, Eigen::ComputeFullU);
    const VectorXd& sv = svd.singularValues();
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv[i] > tol) ++rank;
    return Subspace{svd.matrixU().rightCols(n - rank)};
}

Subspace intersect(const Subspace& lhs, const Subspace& rhs, double tol) {
    if (lhs.ambient() != rhs.ambient()) throw InputError("subspaces live in different spaces");
    const int n = lhs.ambient();
    if (lhs.dim() == 0 || rhs.dim() == 0) return Subspace{MatrixXd(n, 0)};
    Eigen::JacobiSVD<MatrixXd> svd(lhs.basis.transpose() * rhs.basis, Eigen::ComputeFullU);
    const VectorXd& sv = svd.singularValues();
    Eigen::Index k = 0;
    while (k < sv.size() && sv[k] >= 1.0 - tol) ++k;
    return Subspace{orthonormalize(lhs.basis * svd.matrixU().leftCols(k), 1e-12)};
}

int intersection_dimension(const Subspace& lhs, const Subspace& rhs, double tol) {
    if (lhs.ambient() != rhs.ambient()) throw InputError("subspaces live in different spaces");
    MatrixXd joint(lhs.ambient(), lhs.dim() + rhs.dim());
    joint << lhs.basis, rhs.basis;
    if (joint.cols() == 0) return 0;
    Eigen::JacobiSVD<MatrixXd> svd(joint);
    int rank = 0;
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()[i] > tol) ++rank;
    return lhs.dim() + rhs.dim() - rank;
}

double max_restricted_eigenvalue(const Subspace& w, const MatrixXd& op) {
    if (w.dim() == 0) return -std::numeric_limits<double>::infinity();
    const MatrixXd restricted = w.basis.transpose() * op * w.basis;
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (restricted + restricted.transpose()), Eigen::EigenvaluesOnly);
    return es.eigenvalues()[es.eigenvalues().size() - 1];
}

CertificateReport dual_floor_certificate(const SdpProblem& problem, const SdpSolution& solution,
                                         std::vector<double> beta, const ToleranceSet& tol) {
    CertificateReport rep;
    const int d = problem.dim();
    rep.d = d;
    rep.a = problem.a;
    rep.equality_count = static_cast<int>(problem.equality_vectors.size());
    rep.count_ok = rep.equality_count <= d / problem.a + 1e-12;

    rep.objective = solution.gram.trace();
    rep.objective_floor = d / 3.0;
    rep.objective_ok = rep.objective >= rep.objective_floor - tol.obj * d;

    if (beta.empty()) beta.assign(problem.pd_pairs.size(), 1.0);
    if (beta.size() != problem.pd_pairs.size()) throw InputError("one multiplier per pd pair is required");

    std::vector<VectorXd> coeffs;
    coeffs.reserve(problem.pd_pairs.size());
    for (const auto& pair : problem.pd_pairs) coeffs.push_back(pair.coeff);
    const Subspace w0 = nsd_subspace(coeffs, beta, d);
    const Subspace w1 = complement_of_span(problem.equality_vectors, d);
    const Subspace w = intersect(w1, w0);
    rep.w0_dim = w0.dim();
    rep.c_dim = d - w1.dim();
    rep.equality_rank = rep.c_dim;
    rep.w_dim = w.dim();
    rep.dimension_ok = rep.w_dim >= rep.w0_dim - rep.c_dim && 2 * rep.w0_dim >= d;

    // Small-row part of the dual operator, with the problem's own weights.
    MatrixXd bk = MatrixXd::Zero(d, d);
    VectorXd b = VectorXd::Ones(d);
    for (std::size_t c = 0; c < problem.pd_pairs.size(); ++c) {
        const auto& pair = problem.pd_pairs[c];
        bk += beta[c] * pair.coeff * pair.coeff.transpose();
        bk.diagonal() -= 2.0 * beta[c] * pair.weight;
        b += 2.0 * beta[c] * pair.weight;
    }
    const double bk_scale = std::max(1.0, bk.cwiseAbs().maxCoeff() * d);
    rep.restricted_max_eigenvalue = max_restricted_eigenvalue(w, bk);
    rep.nsd_ok = w.dim() == 0 || rep.restricted_max_eigenvalue <= 1e-8 * bk_scale;

    DualSolution dual{b, VectorXd::Zero(rep.equality_count), Eigen::Map<const VectorXd>(beta.data(), beta.size())};
    const DualCheck check = check_dual_feasibility(problem, dual, tol);
    rep.dual_feasible = check.feasible;
    rep.dual_objective = check.objective;
    rep.projected_trace = (w.projector().diagonal().array() * b.array()).sum();
    rep.projected_trace_ok = rep.projected_trace >= rep.w_dim - 1e-8 * std::max(1, d);
    rep.weak_duality_ok = rep.objective <= rep.dual_objective + tol.obj * std::max(1, d);
    return rep;
}

}  // namespace rwdisc
