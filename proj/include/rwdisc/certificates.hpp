#pragma once

#include <vector>

#include <Eigen/Dense>

#include "rwdisc/sdp.hpp"

namespace rwdisc {

/// A linear subspace of R^n given by orthonormal columns.
struct Subspace {
    Eigen::MatrixXd basis;

    int dim() const { return static_cast<int>(basis.cols()); }
    int ambient() const { return static_cast<int>(basis.rows()); }
    Eigen::MatrixXd projector() const { return basis * basis.transpose(); }
};

/// Squared singular values of `m` (all n of them, ascending; zeros for n > h).
Eigen::VectorXd squared_singular_values(const Eigen::MatrixXd& m);

/// For M with columns of norm <= 1: the span of right singular vectors with
/// sigma^2 <= 2. Its dimension is at least ceil(n/2) and ||My||^2 <= 2||y||^2 on it.
Subspace column_subspace(const Eigen::MatrixXd& m);

/// B = sum_v beta_v (v v' - 2 sum_i v_i^2 e_i e_i').
Eigen::MatrixXd nsd_operator(const std::vector<Eigen::VectorXd>& vectors, const std::vector<double>& multipliers,
                             int n);

/// A subspace of dimension >= ceil(n/2) on which nsd_operator(...) is negative
/// semidefinite, built by column-normalizing the weighted vector matrix.
Subspace nsd_subspace(const std::vector<Eigen::VectorXd>& vectors, const std::vector<double>& multipliers, int n);

/// Orthogonal complement of span(vectors) in R^n.
Subspace complement_of_span(const std::vector<Eigen::VectorXd>& vectors, int n, double tol = 1e-8);

/// Intersection through the principal angles of the two bases: directions
/// with cosine >= 1 - tol.
Subspace intersect(const Subspace& lhs, const Subspace& rhs, double tol = 1e-8);

/// dim(lhs) + dim(rhs) - rank([lhs rhs]); an independent count of dim(lhs cap rhs).
int intersection_dimension(const Subspace& lhs, const Subspace& rhs, double tol = 1e-8);

/// Largest eigenvalue of basis' * op * basis (-inf for the zero subspace).
double max_restricted_eigenvalue(const Subspace& w, const Eigen::MatrixXd& op);

struct CertificateReport {
    int d = 0;
    double a = 0.0;
    int equality_count = 0;
    int equality_rank = 0;
    bool count_ok = false;  ///< equality_count <= d / a

    double objective = 0.0;
    double objective_floor = 0.0;  ///< d / 3
    bool objective_ok = false;

    int w0_dim = 0;  ///< subspace where the small-row operator is NSD
    int c_dim = 0;   ///< span of equality vectors
    int w_dim = 0;   ///< W0 intersected with the complement of C
    bool dimension_ok = false;
    double restricted_max_eigenvalue = 0.0;
    bool nsd_ok = false;

    double dual_objective = 0.0;
    bool dual_feasible = false;
    double projected_trace = 0.0;  ///< trace(P_W diag(b))
    bool projected_trace_ok = false;
    bool weak_duality_ok = false;

    bool pass() const {
        return count_ok && objective_ok && dimension_ok && nsd_ok && dual_feasible && projected_trace_ok &&
               weak_duality_ok;
    }
};

/// Checks the counting bound on equality rows, the objective floor, and the
/// projected-trace argument for the dual b_i = 1 + 2 sum_c beta_c w_c(i),
/// alpha = 0, built from `beta` (all ones when empty).
CertificateReport dual_floor_certificate(const SdpProblem& problem, const SdpSolution& solution,
                                         std::vector<double> beta = {}, const ToleranceSet& tol = {});

}  // namespace rwdisc
