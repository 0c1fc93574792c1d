#pragma once

#include <optional>
#include <span>
#include <vector>

#include "rwdisc/core.hpp"
#include "rwdisc/walk.hpp"

namespace rwdisc {

struct FreedmanQuery {
    double lambda = 0.0;
    double sigma_sq = 0.0;
    double M = 0.0;
};

/// min(1, 2 exp(-lambda^2 / (2 (sigma^2 + M lambda / 3)))).
double freedman_bound(const FreedmanQuery& q);

struct EnergyPoint {
    long long k = 0;
    double D = 0.0;  ///< signed discrepancy of the fractional coloring
    double E = 0.0;  ///< sum_i w_i x_k(i)^2
    double Q = 0.0;
    double L = 0.0;
    double Q_prime = 0.0;
    double Z = 0.0;  ///< Q - Q_prime
};

/// Replayed ledger of one row. series[0] is the start state (k = 0) and
/// series[i] the state after step i.
struct EnergyTrace {
    int row = 0;
    std::optional<long long> activation_k;  ///< first step at which the row is small
    std::optional<double> truncation;       ///< Komlós entries kept: |b| <= truncation
    std::vector<EnergyPoint> series;

    double max_identity_error = 0.0;      ///< max relative |E - E0 - Q - L|
    double max_big_phase_increment = 0.0; ///< max |Delta D| while the row is big
    double max_variance_ratio = 0.0;      ///< max Var(Delta D) / (2 Delta Q')
    double max_linear_ratio = 0.0;        ///< max Var(Delta L) / (8 Delta Q') on active steps
    double injected_energy = 0.0;         ///< sum |Delta E| after activation

    bool identity_ok(double rel_tol = 1e-9) const { return max_identity_error <= rel_tol; }
    bool variance_ok(double slack = 1e-9) const { return max_variance_ratio <= 1.0 + slack; }
    bool linear_ok(double slack = 1e-9) const { return max_linear_ratio <= 1.0 + slack; }
};

/// Replays D, E, Q, L, Q' for `row` of `instance` from full-trace records.
/// `instance` supplies the row coefficients; for a preprocessed Komlós run the
/// original matrix works since columns are unchanged. Set systems use weight 1,
/// matrices weight b^2 (restricted to |b| <= truncation when given).
/// Throws PreconditionError when the records lack full traces or skip steps.
EnergyTrace energy_ledger(const Instance& instance, std::span<const StepRecord> steps, const WalkParams& params,
                          int row, std::optional<double> truncation = std::nullopt);

/// max over k >= activation of E(k) - E(activation - 1) <= cap + slack.
/// Throws PreconditionError when the row never activates.
bool energy_rise_after_activation(const EnergyTrace& trace, double cap, double slack = 1e-9);

/// Largest post-activation rise E(k) - E(activation - 1) (0 when never active).
double energy_rise(const EnergyTrace& trace);

struct TailRow {
    double lambda = 0.0;
    double threshold = 0.0;       ///< lambda sqrt(t) for set systems, lambda for matrices
    double row_frequency = 0.0;   ///< fraction of (run, row) pairs with |D| >= threshold
    double run_frequency = 0.0;   ///< fraction of runs whose max |D| >= threshold
    double bound = 0.0;           ///< reference tail bound, reported only
};

struct TailTable {
    Setting setting = Setting::BeckFiala;
    int runs = 0;
    std::vector<TailRow> rows;
    double median_max = 0.0;
    double p90_max = 0.0;
};

/// Linear-interpolation percentile (p in [0, 100]) of a non-empty sample.
double percentile(std::vector<double> values, double p);

/// Empirical exceedance table; needs at least two reports.
/// Reference bounds: 8 exp(-l^2/(100a)) for set systems, 8 exp(-l^2/(1000a)) for matrices.
TailTable tail_estimate(std::span<const RunReport> reports, std::span<const double> lambda_grid, Setting setting,
                        int t, double a);

}  // namespace rwdisc
