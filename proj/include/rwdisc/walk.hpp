#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rwdisc/core.hpp"
#include "rwdisc/sdp.hpp"

namespace rwdisc {

enum class TraceLevel { None, Scalar, Full };

std::string to_string(TraceLevel level);
TraceLevel trace_level_from_string(const std::string& name);

/// One step of the walk. Scalar fields are always filled; the vectors below
/// the marker are only populated at TraceLevel::Full.
struct StepRecord {
    long long k = 0;
    int alive_before = 0;  ///< d = |A_k|
    double objective = 0.0;
    /// Realized multiplier of <r_k, u_i>. Equals gamma unless the step was
    /// shortened so that no coordinate leaves [-1, 1].
    double step_scale = 0.0;
    std::vector<int> frozen_this_step;
    int big_rows = 0;
    double max_big_row_increment = 0.0;
    double potential_after = 0.0;         ///< G_k
    double potential_restricted = 0.0;    ///< sum over A_k of 1 - x_{k-1}(i)^2
    double expected_potential = 0.0;      ///< E[G_k | X] from the update vectors
    bool residuals_pass = true;
    std::string solver_method;
    int solver_iterations = 0;
    /// Signed per-row sums of x_k in input row order, every snapshot_every steps.
    Eigen::VectorXd row_snapshot;

    // Full trace only.
    std::vector<double> signs;
    std::vector<int> alive_index;
    Eigen::MatrixXd vectors;
    Eigen::VectorXd x_prev;
    Eigen::VectorXd x_after;
    std::vector<int> big_row_index;
    Eigen::VectorXd per_row_increment;
};

/// Everything a step observer may inspect, valid for the duration of the call.
struct StepContext {
    const SdpProblem& problem;
    const SdpSolution& solution;
    const StepRecord& record;
    const std::vector<double>& signs;
    const Eigen::VectorXd& x_prev;
    const Eigen::VectorXd& x_after;
};

using StepObserver = std::function<void(const StepContext&)>;

struct WalkOptions {
    TraceLevel trace = TraceLevel::None;
    ToleranceSet tolerances;
    SolverOptions solver;
    bool warm_start = true;
    /// Drop low-l1 rows of a Komlós matrix before walking.
    bool preprocess_komlos = true;
    /// Komlós reporting threshold; 0 selects 8 sqrt(ln n).
    double report_lambda = 0.0;
    /// With tracing on, record a per-row snapshot every this many steps (0: never).
    long long snapshot_every = 0;
    StepObserver observer;
};

struct KomlosSummary {
    std::vector<int> discarded_rows;
    double l1_threshold = 0.0;
    double lambda = 0.0;
    double truncation_threshold = 0.0;  ///< 4a / lambda
    Eigen::VectorXd truncated_discrepancy;
};

struct RunReport {
    Eigen::VectorXd final_coloring;
    Eigen::VectorXd per_row_discrepancy;
    double max_discrepancy = 0.0;
    long long steps_taken = 0;
    int alive_at_end_of_walk = 0;
    bool extended = false;         ///< walked past t_max (practical mode)
    bool forced_rounding = false;  ///< alive variables remained at the step cap
    std::uint64_t seed = 0;
    WalkParams params;

    double min_objective_ratio = 1.0;  ///< min over steps of trace(X)/|A_k|
    double max_big_row_increment = 0.0;
    long long splitting_steps = 0;     ///< steps that needed the iterative solver
    std::optional<KomlosSummary> komlos;

    std::vector<StepRecord> steps;  ///< filled when trace != None
    std::vector<double> potential_series;

    double seconds = 0.0;
};

WalkState init_state(const Instance& instance, const WalkParams& params);

/// Sum over alive i of 1 - x(i)^2.
double potential(const WalkState& state);

/// Frozen i: +1 iff x(i) >= freeze_threshold, else -1. Alive i: sign(x(i)), 0 -> +1.
Eigen::VectorXd final_round(const WalkState& state, double freeze_threshold);

/// Incremental driver that keeps precomputed rows and the warm start.
class Walker {
public:
    Walker(const Instance& instance, const WalkParams& params, WalkOptions options = {});

    const WalkState& state() const { return state_; }
    void set_state(WalkState state);

    /// One step; returns a record with alive_before = 0 and no update when
    /// every variable is frozen after the pre-step freeze pass.
    StepRecord advance();

private:
    std::vector<int> freeze_pass();

    const Instance& instance_;
    WalkParams params_;
    WalkOptions options_;
    Setting setting_;
    int t_ = 0;
    std::vector<SparseRow> rows_;
    WalkState state_;
    Eigen::MatrixXd warm_gram_;
    std::vector<int> warm_index_;
};

std::pair<WalkState, StepRecord> step(const Instance& instance, const WalkState& state, const WalkParams& params,
                                      const WalkOptions& options = {});

RunReport run(const Instance& instance, const WalkParams& params, const WalkOptions& options = {});

}  // namespace rwdisc
