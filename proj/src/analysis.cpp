#include "rwdisc/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>

#include "rwdisc/errors.hpp"

namespace rwdisc {

using Eigen::VectorXd;

double freedman_bound(const FreedmanQuery& q) {
    if (!(q.lambda >= 0.0) || !(q.sigma_sq >= 0.0) || !(q.M >= 0.0))
        throw InputError("freedman_bound: inputs must be non-negative");
    const double denom = 2.0 * (q.sigma_sq + q.M * q.lambda / 3.0);
    if (denom == 0.0) return q.lambda > 0.0 ? 0.0 : 1.0;
    return std::min(1.0, 2.0 * std::exp(-q.lambda * q.lambda / denom));
}

namespace {

struct RowWeights {
    VectorXd coef;    // dense, zero outside the (truncated) row
    VectorXd weight;  // coef^2 for matrices, indicator for sets
};

RowWeights row_weights(const SparseRow& row, int n, std::optional<double> truncation) {
    RowWeights w{VectorXd::Zero(n), VectorXd::Zero(n)};
    for (const auto& e : row) {
        if (truncation && std::abs(e.coef) > *truncation) continue;
        w.coef[e.col] = e.coef;
        w.weight[e.col] = e.coef * e.coef;
    }
    return w;
}

double ratio(double num, double den) {
    if (num <= 0.0) return 0.0;
    if (den <= 0.0) return std::numeric_limits<double>::infinity();
    return num / den;
}

}  // namespace

EnergyTrace energy_ledger(const Instance& instance, std::span<const StepRecord> steps, const WalkParams& params,
                          int row, std::optional<double> truncation) {
    const int n = element_count(instance);
    const auto rows = sparse_rows(instance);
    if (row < 0 || row >= static_cast<int>(rows.size())) throw InputError("energy_ledger: row out of range");
    if (steps.empty()) throw PreconditionError("energy_ledger: no step records");
    const Setting setting = setting_of(instance);
    if (setting == Setting::BeckFiala) truncation.reset();
    const int t = setting == Setting::BeckFiala ? std::get<SetSystemInstance>(instance).t : 0;

    EnergyTrace tr;
    tr.row = row;
    tr.truncation = truncation;
    const RowWeights rw = row_weights(rows[row], n, truncation);
    const double g2 = params.gamma * params.gamma;

    auto point = [&](long long k, const VectorXd& x) {
        EnergyPoint p;
        p.k = k;
        p.D = rw.coef.dot(x);
        p.E = rw.weight.dot(x.cwiseAbs2());
        return p;
    };

    std::vector<bool> is_big;
    is_big.reserve(steps.size());
    std::vector<std::uint8_t> alive(static_cast<std::size_t>(n), 0);

    for (std::size_t s = 0; s < steps.size(); ++s) {
        const StepRecord& rec = steps[s];
        const int d = static_cast<int>(rec.alive_index.size());
        if (rec.x_prev.size() != n || rec.x_after.size() != n || rec.vectors.rows() != d ||
            static_cast<int>(rec.signs.size()) != rec.vectors.cols() || d != rec.alive_before)
            throw PreconditionError("energy_ledger: step " + std::to_string(rec.k) + " lacks a full trace");
        if (rec.k != static_cast<long long>(s) + 1)
            throw PreconditionError("energy_ledger: step records must be consecutive from k = 1");
        if (s == 0) tr.series.push_back(point(0, rec.x_prev));

        std::fill(alive.begin(), alive.end(), 0);
        for (int p = 0; p < d; ++p) {
            alive[rec.alive_index[p]] = 1;
        }
        const bool big = row_is_big(setting, rows[row], alive, params.a, t);
        is_big.push_back(big);

        const VectorXd r = Eigen::Map<const VectorXd>(rec.signs.data(), static_cast<Eigen::Index>(rec.signs.size()));
        const VectorXd proj = rec.vectors * r;
        const double sc = rec.step_scale;

        double dq = 0.0, dl = 0.0, dqp = 0.0;
        VectorXd sum_cu = VectorXd::Zero(rec.vectors.cols());
        VectorXd sum_wxu = VectorXd::Zero(rec.vectors.cols());
        for (int p = 0; p < d; ++p) {
            const int i = rec.alive_index[p];
            const double w = rw.weight[i];
            if (w == 0.0) continue;
            dq += sc * sc * w * proj[p] * proj[p];
            dl += 2.0 * sc * w * rec.x_prev[i] * proj[p];
            dqp += g2 * w * rec.vectors.row(p).squaredNorm();
            sum_cu += rw.coef[i] * rec.vectors.row(p).transpose();
            sum_wxu += w * rec.x_prev[i] * rec.vectors.row(p).transpose();
        }

        const EnergyPoint& prev = tr.series.back();
        EnergyPoint cur = point(rec.k, rec.x_after);
        cur.Q = prev.Q + dq;
        cur.L = prev.L + dl;
        cur.Q_prime = prev.Q_prime + dqp;
        cur.Z = cur.Q - cur.Q_prime;

        const double e0 = tr.series.front().E;
        const double err = std::abs(cur.E - e0 - cur.Q - cur.L);
        const double scale = std::max({std::abs(cur.E), std::abs(e0) + cur.Q + std::abs(cur.L)});
        if (err > 0.0) tr.max_identity_error = std::max(tr.max_identity_error, scale > 0.0 ? err / scale : err);

        if (big) {
            tr.max_big_phase_increment = std::max(tr.max_big_phase_increment, std::abs(cur.D - prev.D));
        } else {
            tr.max_variance_ratio = std::max(tr.max_variance_ratio, ratio(g2 * sum_cu.squaredNorm(), 2.0 * dqp));
            tr.max_linear_ratio = std::max(tr.max_linear_ratio, ratio(4.0 * g2 * sum_wxu.squaredNorm(), 8.0 * dqp));
            tr.injected_energy += std::abs(cur.E - prev.E);
        }
        tr.series.push_back(cur);
    }

    const auto flags = std::make_unique<bool[]>(is_big.size());
    std::copy(is_big.begin(), is_big.end(), flags.get());
    tr.activation_k = activation_step(std::span<const bool>(flags.get(), is_big.size()));
    return tr;
}

double energy_rise(const EnergyTrace& trace) {
    if (!trace.activation_k) return 0.0;
    const auto base = static_cast<std::size_t>(*trace.activation_k - 1);
    double rise = 0.0;
    for (std::size_t i = base; i < trace.series.size(); ++i)
        rise = std::max(rise, trace.series[i].E - trace.series[base].E);
    return rise;
}

bool energy_rise_after_activation(const EnergyTrace& trace, double cap, double slack) {
    if (!trace.activation_k) throw PreconditionError("energy_rise_after_activation: row never becomes active");
    return energy_rise(trace) <= cap + slack;
}

double percentile(std::vector<double> values, double p) {
    if (values.empty()) throw InputError("percentile of an empty sample");
    if (!(p >= 0.0 && p <= 100.0)) throw InputError("percentile must lie in [0, 100]");
    std::sort(values.begin(), values.end());
    const double pos = p / 100.0 * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

TailTable tail_estimate(std::span<const RunReport> reports, std::span<const double> lambda_grid, Setting setting,
                        int t, double a) {
    if (reports.size() < 2) throw InputError("tail_estimate needs at least two reports");
    TailTable table;
    table.setting = setting;
    table.runs = static_cast<int>(reports.size());

    std::vector<double> maxima;
    maxima.reserve(reports.size());
    for (const auto& r : reports) maxima.push_back(r.max_discrepancy);
    table.median_max = percentile(maxima, 50.0);
    table.p90_max = percentile(maxima, 90.0);

    const double denom = setting == Setting::BeckFiala ? 100.0 * a : 1000.0 * a;
    for (double lambda : lambda_grid) {
        if (!(lambda >= 0.0)) throw InputError("lambda grid entries must be non-negative");
        TailRow row;
        row.lambda = lambda;
        row.threshold = setting == Setting::BeckFiala ? lambda * std::sqrt(static_cast<double>(t)) : lambda;
        long long hits = 0, total = 0, run_hits = 0;
        for (const auto& r : reports) {
            for (Eigen::Index j = 0; j < r.per_row_discrepancy.size(); ++j, ++total)
                if (std::abs(r.per_row_discrepancy[j]) >= row.threshold) ++hits;
            if (r.max_discrepancy >= row.threshold) ++run_hits;
        }
        row.row_frequency = total ? static_cast<double>(hits) / static_cast<double>(total) : 0.0;
        row.run_frequency = static_cast<double>(run_hits) / static_cast<double>(reports.size());
        row.bound = std::min(1.0, 8.0 * std::exp(-lambda * lambda / denom));
        table.rows.push_back(row);
    }
    return table;
}

}  // namespace rwdisc
