#pragma once

#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rwdisc/core.hpp"

namespace rwdisc {

/// Named tolerance classes used by the solver and every residual check.
struct ToleranceSet {
    double eq = 1e-8;     ///< |v'Xv| <= eq * d
    double ineq = 1e-6;   ///< pd slack >= -ineq, X_ii <= 1 + ineq
    double psd = 1e-8;    ///< min eigenvalue >= -psd * d
    double obj = 1e-6;    ///< trace(X) >= d/3 - obj * d
    double fact = 1e-8;   ///< |<u_i,u_j> - X_ij| <= fact
    double rank = 1e-10;  ///< factor dimensions below this eigenvalue are dropped
};

enum class PdKind { Proportional, Orthogonality };

/// Encodes coeff' X coeff <= 2 * sum_i weight(i) X_ii.
struct PdPair {
    Eigen::VectorXd coeff;
    Eigen::VectorXd weight;
    int row = -1;
    PdKind kind = PdKind::Proportional;
    /// Truncation threshold the pair was generated for (infinity for set systems).
    double threshold = std::numeric_limits<double>::infinity();
};

/// The per-step SDP on the alive variables: maximize trace(X) over X PSD with
/// v'Xv = 0 for every equality vector, every PdPair, and X_ii <= 1.
struct SdpProblem {
    std::vector<int> alive_index;
    std::vector<Eigen::VectorXd> equality_vectors;
    std::vector<int> equality_rows;
    std::vector<PdPair> pd_pairs;
    double a = 6.0;

    int dim() const { return static_cast<int>(alive_index.size()); }
    void validate() const;
};

struct ConstraintResidual {
    std::string name;
    double value = 0.0;
    double limit = 0.0;
};

struct ResidualReport {
    double max_equality = 0.0;       ///< max |v'Xv|
    double max_equality_action = 0.0;  ///< max ||Xv||_inf
    double min_pd_slack = std::numeric_limits<double>::infinity();
    double max_diag_overflow = -std::numeric_limits<double>::infinity();  ///< max X_ii - 1
    double min_eigenvalue = 0.0;
    double max_factor_error = 0.0;
    double objective = 0.0;
    double objective_floor = 0.0;

    bool equality_ok = true;
    bool inequality_ok = true;
    bool diag_ok = true;
    bool psd_ok = true;
    bool factor_ok = true;
    bool objective_ok = true;

    std::vector<ConstraintResidual> violations;

    bool feasible() const { return equality_ok && inequality_ok && diag_ok && psd_ok && factor_ok; }
    bool pass() const { return feasible() && objective_ok; }
};

struct SdpSolution {
    Eigen::MatrixXd gram;
    /// Row i is u_i, the update vector of alive variable alive_index[i].
    Eigen::MatrixXd vectors;
    double objective = 0.0;
    ResidualReport residuals;
    int iterations = 0;
    std::string method;
    /// Best-so-far constraint violation at each convergence check.
    std::vector<double> residual_history;
};

struct SolverOptions {
    int max_iterations = 20000;
    int check_every = 10;
    /// Run the splitting iterations even when a structured candidate is
    /// already feasible, to push trace(X) towards the optimum.
    bool polish = false;
    /// Stop early once a feasible point reaches this fraction of d.
    double accept_fraction = 0.5;
    double convergence_eps = 1e-9;
};

SdpProblem build_sdp_beck_fiala(const SetSystemInstance& instance, const WalkState& state, double a);
SdpProblem build_sdp_komlos(const MatrixInstance& instance, const WalkState& state, double a);
SdpProblem build_sdp(const Instance& instance, const WalkState& state, double a);

/// Shared builder over precomputed rows; `t` is ignored for matrices.
SdpProblem build_sdp_rows(Setting setting, const std::vector<SparseRow>& rows, int t,
                          const WalkState& state, double a);

/// `warm_start`, when given, is a d x d matrix over the same alive indices.
SdpSolution solve(const SdpProblem& problem, const ToleranceSet& tol = {},
                  const SolverOptions& options = {}, const Eigen::MatrixXd* warm_start = nullptr);

/// Rows u_i with <u_i,u_j> = X_ij. Throws InputError when X is not symmetric
/// or has an eigenvalue below -psd * d.
Eigen::MatrixXd factorize(const Eigen::MatrixXd& gram, const ToleranceSet& tol = {});

ResidualReport check_feasibility(const SdpProblem& problem, const SdpSolution& solution,
                                 const ToleranceSet& tol = {});

/// Dual multipliers: `b` over alive variables, `alpha` over equality vectors,
/// `beta` over pd_pairs (Proportional pairs carry beta_S, Orthogonality
/// pairs carry beta_S^x).
struct DualSolution {
    Eigen::VectorXd b;
    Eigen::VectorXd alpha;
    Eigen::VectorXd beta;
};

struct DualCheck {
    bool feasible = false;
    bool signs_ok = false;
    double min_eigenvalue = 0.0;  ///< of (dual operator - I)
    double objective = 0.0;       ///< sum of b
};

/// Dual operator sum b_i e_ie_i' + sum alpha v v' + sum beta (c c' - 2 diag(w)).
Eigen::MatrixXd dual_operator(const SdpProblem& problem, const DualSolution& dual);

DualCheck check_dual_feasibility(const SdpProblem& problem, const DualSolution& dual,
                                 const ToleranceSet& tol = {});

}  // namespace rwdisc
