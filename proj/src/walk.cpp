#include "rwdisc/walk.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "rwdisc/errors.hpp"
#include "rwdisc/komlos.hpp"
#include "rwdisc/rng.hpp"

namespace rwdisc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string to_string(TraceLevel level) {
    switch (level) {
        case TraceLevel::None: return "none";
        case TraceLevel::Scalar: return "scalar";
        case TraceLevel::Full: return "full";
    }
    return "none";
}

TraceLevel trace_level_from_string(const std::string& name) {
    if (name == "none") return TraceLevel::None;
    if (name == "scalar") return TraceLevel::Scalar;
    if (name == "full") return TraceLevel::Full;
    throw InputError("unknown trace level '" + name + "' (expected none, scalar or full)");
}

WalkState init_state(const Instance& instance, const WalkParams& params) {
    params.validate();
    const int n = element_count(instance);
    WalkState s;
    s.x = VectorXd::Zero(n);
    s.alive.assign(static_cast<std::size_t>(n), 1);
    s.k = 0;
    s.seed = params.seed;
    return s;
}

double potential(const WalkState& state) {
    double g = 0.0;
    for (int i = 0; i < state.n(); ++i)
        if (state.alive[i]) g += 1.0 - state.x[i] * state.x[i];
    return g;
}

VectorXd final_round(const WalkState& state, double freeze_threshold) {
    VectorXd out(state.n());
    for (int i = 0; i < state.n(); ++i) {
        if (!state.alive[i])
            out[i] = state.x[i] >= freeze_threshold ? 1.0 : -1.0;
        else
            out[i] = state.x[i] < 0.0 ? -1.0 : 1.0;
    }
    return out;
}

Walker::Walker(const Instance& instance, const WalkParams& params, WalkOptions options)
    : instance_(instance),
      params_(params),
      options_(std::move(options)),
      setting_(setting_of(instance)),
      rows_(sparse_rows(instance)),
      state_(init_state(instance, params)) {
    if (setting_ == Setting::BeckFiala) t_ = std::get<SetSystemInstance>(instance).t;
}

void Walker::set_state(WalkState state) {
    if (state.n() != element_count(instance_) || state.alive.size() != static_cast<std::size_t>(state.n()))
        throw InputError("walk state does not match instance size");
    state_ = std::move(state);
    warm_gram_.resize(0, 0);
    warm_index_.clear();
}

std::vector<int> Walker::freeze_pass() {
    std::vector<int> frozen;
    for (int i = 0; i < state_.n(); ++i) {
        if (state_.alive[i] && std::abs(state_.x[i]) >= params_.freeze_threshold) {
            state_.alive[i] = 0;
            frozen.push_back(i);
        }
    }
    return frozen;
}

StepRecord Walker::advance() {
    StepRecord rec;
    rec.frozen_this_step = freeze_pass();
    rec.k = state_.k + 1;
    const SdpProblem problem = build_sdp_rows(setting_, rows_, t_, state_, params_.a);
    const int d = problem.dim();
    rec.alive_before = d;
    if (d == 0) {
        rec.k = state_.k;
        return rec;
    }

    MatrixXd warm;
    const MatrixXd* warm_ptr = nullptr;
    if (options_.warm_start && !warm_index_.empty()) {
        // Restrict the previous gram to the surviving alive indices.
        std::vector<int> prev_pos;
        prev_pos.reserve(d);
        std::size_t q = 0;
        for (int i : problem.alive_index) {
            while (q < warm_index_.size() && warm_index_[q] < i) ++q;
            prev_pos.push_back(q < warm_index_.size() && warm_index_[q] == i ? static_cast<int>(q) : -1);
        }
        if (std::all_of(prev_pos.begin(), prev_pos.end(), [](int v) { return v >= 0; })) {
            warm.resize(d, d);
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < d; ++b) warm(a, b) = warm_gram_(prev_pos[a], prev_pos[b]);
            warm_ptr = &warm;
        }
    }

    const SdpSolution sol = solve(problem, options_.tolerances, options_.solver, warm_ptr);
    if (!sol.residuals.feasible() || !(sol.objective > 0.0)) {
        std::ostringstream os;
        os << "step " << rec.k << ": solver returned an unusable point (objective " << sol.objective
           << ", d=" << d << ")";
        for (const auto& v : sol.residuals.violations) os << "; " << v.name << "=" << v.value;
        throw SolverError(os.str());
    }
    rec.objective = sol.objective;
    rec.residuals_pass = sol.residuals.pass();
    rec.solver_method = sol.method;
    rec.solver_iterations = sol.iterations;

    const int dim = static_cast<int>(sol.vectors.cols());
    const std::vector<double> signs = CounterRng(state_.seed).signs(static_cast<std::uint64_t>(rec.k), dim);
    const VectorXd r = Eigen::Map<const VectorXd>(signs.data(), dim);
    const VectorXd proj = sol.vectors * r;

    // Shorten the whole step, never single coordinates, so that every linear
    // constraint on the increment survives.
    double scale = params_.gamma;
    for (int p = 0; p < d; ++p) {
        const double v = proj[p];
        if (v == 0.0) continue;
        const double xi = state_.x[problem.alive_index[p]];
        const double room = v > 0.0 ? 1.0 - xi : 1.0 + xi;
        if (scale * std::abs(v) > room) scale = room / std::abs(v);
    }
    rec.step_scale = scale;

    const VectorXd x_prev = state_.x;
    for (int p = 0; p < d; ++p) {
        const int i = problem.alive_index[p];
        const double v = proj[p];
        double xi = x_prev[i] + scale * v;
        if (v != 0.0 && scale < params_.gamma) {
            const double room = v > 0.0 ? 1.0 - x_prev[i] : 1.0 + x_prev[i];
            if (scale * std::abs(v) >= room) xi = v > 0.0 ? 1.0 : -1.0;
        }
        state_.x[i] = std::clamp(xi, -1.0, 1.0);
    }
    for (int p = 0; p < d; ++p) {
        const int i = problem.alive_index[p];
        if (std::abs(state_.x[i]) >= params_.freeze_threshold) {
            state_.alive[i] = 0;
            rec.frozen_this_step.push_back(i);
        }
    }
    state_.k = rec.k;

    rec.big_rows = static_cast<int>(problem.equality_rows.size());
    for (int j : problem.equality_rows) {
        double inc = 0.0;
        for (const auto& e : rows_[j]) inc += e.coef * (state_.x[e.col] - x_prev[e.col]);
        rec.max_big_row_increment = std::max(rec.max_big_row_increment, std::abs(inc));
    }

    const double g2 = params_.gamma * params_.gamma;
    for (int p = 0; p < d; ++p) {
        const double xi = x_prev[problem.alive_index[p]];
        rec.potential_restricted += 1.0 - xi * xi;
        rec.expected_potential += 1.0 - xi * xi - g2 * sol.vectors.row(p).squaredNorm();
    }
    rec.potential_after = potential(state_);

    if (options_.trace == TraceLevel::Full) {
        rec.signs = signs;
        rec.alive_index = problem.alive_index;
        rec.vectors = sol.vectors;
        rec.x_prev = x_prev;
        rec.x_after = state_.x;
        rec.big_row_index = problem.equality_rows;
        rec.per_row_increment.resize(static_cast<Eigen::Index>(rows_.size()));
        for (std::size_t j = 0; j < rows_.size(); ++j) {
            double inc = 0.0;
            for (const auto& e : rows_[j]) inc += e.coef * (state_.x[e.col] - x_prev[e.col]);
            rec.per_row_increment[static_cast<Eigen::Index>(j)] = inc;
        }
    }

    if (options_.observer) options_.observer(StepContext{problem, sol, rec, signs, x_prev, state_.x});

    if (options_.warm_start) {
        warm_gram_ = sol.gram;
        warm_index_ = problem.alive_index;
    }
    return rec;
}

std::pair<WalkState, StepRecord> step(const Instance& instance, const WalkState& state, const WalkParams& params,
                                      const WalkOptions& options) {
    Walker walker(instance, params, options);
    walker.set_state(state);
    StepRecord rec = walker.advance();
    return {walker.state(), std::move(rec)};
}

RunReport run(const Instance& instance, const WalkParams& params, const WalkOptions& options) {
    const auto start = std::chrono::steady_clock::now();
    params.validate();
    RunReport rep;
    rep.params = params;
    rep.seed = params.seed;

    std::optional<Preprocessed> pre;
    const auto* matrix = std::get_if<MatrixInstance>(&instance);
    if (matrix && options.preprocess_komlos && matrix->cols() >= 2) pre = preprocess(*matrix);
    const Instance walked = pre ? Instance{pre->kept} : instance;

    Walker walker(walked, params, options);
    const double cap = params.mode == Mode::Practical
                           ? std::min(9.0e18, static_cast<double>(params.t_max) * params.tmax_extension)
                           : static_cast<double>(params.t_max);
    const auto step_cap = static_cast<long long>(cap);

    while (walker.state().alive_count() > 0 && walker.state().k < step_cap) {
        StepRecord rec = walker.advance();
        if (rec.alive_before == 0) break;
        rep.min_objective_ratio = std::min(rep.min_objective_ratio, rec.objective / rec.alive_before);
        rep.max_big_row_increment = std::max(rep.max_big_row_increment, rec.max_big_row_increment);
        if (rec.solver_method == "splitting") ++rep.splitting_steps;
        if (options.trace != TraceLevel::None) {
            if (options.snapshot_every > 0 && rec.k % options.snapshot_every == 0)
                rec.row_snapshot = discrepancy(instance, walker.state().x).per_row;
            rep.potential_series.push_back(rec.potential_after);
            rep.steps.push_back(std::move(rec));
        }
    }

    const WalkState& fin = walker.state();
    rep.steps_taken = fin.k;
    rep.alive_at_end_of_walk = fin.alive_count();
    rep.extended = fin.k > params.t_max;
    rep.forced_rounding = rep.alive_at_end_of_walk > 0;
    rep.final_coloring = final_round(fin, params.freeze_threshold);

    const Discrepancy disc = discrepancy(instance, rep.final_coloring);
    rep.per_row_discrepancy = disc.per_row;
    rep.max_discrepancy = disc.max_abs;

    if (matrix) {
        KomlosSummary ks;
        const int n = matrix->cols();
        if (pre) {
            ks.discarded_rows = pre->discarded_rows;
            ks.l1_threshold = pre->l1_threshold;
        }
        ks.lambda = options.report_lambda > 0.0 ? options.report_lambda
                                                : 8.0 * std::sqrt(std::log(std::max(2.0, static_cast<double>(n))));
        ks.truncation_threshold = 4.0 * params.a / ks.lambda;
        ks.truncated_discrepancy.resize(matrix->rows());
        for (int j = 0; j < matrix->rows(); ++j) {
            const TruncationPrefix prefix = prefix_at(matrix->b.row(j).transpose(), ks.truncation_threshold, params.a, j);
            ks.truncated_discrepancy[j] = truncated_discrepancy(*matrix, rep.final_coloring, prefix);
        }
        rep.komlos = std::move(ks);
    }

    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rep;
}

}  // namespace rwdisc
