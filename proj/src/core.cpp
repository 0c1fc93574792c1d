#include "rwdisc/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rwdisc/errors.hpp"

namespace rwdisc {

SetSystemInstance SetSystemInstance::make(int n, std::vector<std::vector<int>> sets) {
    if (n < 0) throw InputError("element count must be non-negative");
    std::vector<int> degree(static_cast<std::size_t>(n), 0);
    std::vector<std::uint8_t> seen(static_cast<std::size_t>(n), 0);
    for (std::size_t j = 0; j < sets.size(); ++j) {
        for (int e : sets[j]) {
            if (e < 0 || e >= n) {
                std::ostringstream os;
                os << "set " << j << " contains element " << e << " outside [0, " << n << ")";
                throw InputError(os.str());
            }
            if (seen[e]) {
                std::ostringstream os;
                os << "set " << j << " contains element " << e << " twice";
                throw InputError(os.str());
            }
            seen[e] = 1;
            ++degree[e];
        }
        for (int e : sets[j]) seen[e] = 0;
    }
    SetSystemInstance out;
    out.n = n;
    out.sets = std::move(sets);
    out.t = degree.empty() ? 0 : *std::max_element(degree.begin(), degree.end());
    return out;
}

MatrixInstance MatrixInstance::make(Eigen::MatrixXd b, double norm_slack) {
    for (Eigen::Index i = 0; i < b.cols(); ++i) {
        const double sq = b.col(i).squaredNorm();
        if (!std::isfinite(sq) || sq > 1.0 + norm_slack) {
            std::ostringstream os;
            os.precision(17);
            os << "column " << i << " has squared norm " << sq << " > 1";
            throw InputError(os.str());
        }
    }
    return MatrixInstance{std::move(b)};
}

Setting setting_of(const Instance& instance) {
    return std::holds_alternative<SetSystemInstance>(instance) ? Setting::BeckFiala : Setting::Komlos;
}

int element_count(const Instance& instance) {
    return std::visit(
        [](const auto& inst) {
            if constexpr (std::is_same_v<std::decay_t<decltype(inst)>, SetSystemInstance>)
                return inst.n;
            else
                return inst.cols();
        },
        instance);
}

int row_count(const Instance& instance) {
    return std::visit([](const auto& inst) { return inst.rows(); }, instance);
}

std::vector<SparseRow> sparse_rows(const Instance& instance) {
    std::vector<SparseRow> rows;
    if (const auto* ss = std::get_if<SetSystemInstance>(&instance)) {
        rows.reserve(ss->sets.size());
        for (const auto& s : ss->sets) {
            SparseRow row;
            row.reserve(s.size());
            for (int e : s) row.push_back({e, 1.0});
            rows.push_back(std::move(row));
        }
    } else {
        const auto& m = std::get<MatrixInstance>(instance);
        rows.resize(static_cast<std::size_t>(m.rows()));
        for (int j = 0; j < m.rows(); ++j)
            for (int i = 0; i < m.cols(); ++i)
                if (m.b(j, i) != 0.0) rows[j].push_back({i, m.b(j, i)});
    }
    return rows;
}

std::string to_string(Mode mode) {
    return mode == Mode::PaperFaithful ? "paper" : "practical";
}

Mode mode_from_string(const std::string& name) {
    if (name == "paper") return Mode::PaperFaithful;
    if (name == "practical") return Mode::Practical;
    throw InputError("unknown mode '" + name + "' (expected paper or practical)");
}

void WalkParams::validate() const {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InputError("gamma must be positive");
    if (!(a >= 1.0)) throw InputError("a must be at least 1");
    if (!(freeze_threshold > 0.0 && freeze_threshold < 1.0))
        throw InputError("freeze threshold must lie in (0,1)");
    if (t_max < 0) throw InputError("t_max must be non-negative");
    if (!(tmax_extension >= 1.0)) throw InputError("t_max extension factor must be at least 1");
}

namespace {

// n = 0 and n = 1 have no meaningful 1 - 1/n or ln n; evaluate at n = 2.
double effective_n(const Instance& instance) {
    return std::max(2.0, static_cast<double>(element_count(instance)));
}

long long ceil_steps(double v) {
    constexpr double kMax = 9.0e18;
    return v >= kMax ? static_cast<long long>(kMax) : static_cast<long long>(std::ceil(v));
}

}  // namespace

WalkParams WalkParams::paper(const Instance& instance, std::uint64_t seed) {
    const double n = effective_n(instance);
    const double ln = std::log(n);
    WalkParams p;
    p.mode = Mode::PaperFaithful;
    p.seed = seed;
    p.a = 6.0;
    p.gamma = setting_of(instance) == Setting::BeckFiala ? 1.0 / (n * n * ln) : std::pow(n, -6.0);
    p.t_max = ceil_steps(12.0 / (p.gamma * p.gamma) * ln);
    p.freeze_threshold = 1.0 - 1.0 / n;
    p.tmax_extension = 1.0;
    return p;
}

WalkParams WalkParams::practical(const Instance& instance, std::uint64_t seed) {
    const double n = effective_n(instance);
    WalkParams p;
    p.mode = Mode::Practical;
    p.seed = seed;
    p.a = 6.0;
    p.gamma = 0.1 / std::sqrt(n);
    p.t_max = ceil_steps(3.0 / (p.gamma * p.gamma) * std::log(2.0 * n));
    p.freeze_threshold = 1.0 - 1.0 / n;
    p.tmax_extension = 50.0;
    return p;
}

int WalkState::alive_count() const {
    return static_cast<int>(std::count(alive.begin(), alive.end(), std::uint8_t{1}));
}

std::vector<int> WalkState::alive_indices() const {
    std::vector<int> out;
    for (int i = 0; i < static_cast<int>(alive.size()); ++i)
        if (alive[i]) out.push_back(i);
    return out;
}

int max_degree(const SetSystemInstance& instance) {
    std::vector<int> degree(static_cast<std::size_t>(instance.n), 0);
    for (const auto& s : instance.sets)
        for (int e : s) ++degree[e];
    return degree.empty() ? 0 : *std::max_element(degree.begin(), degree.end());
}

Discrepancy discrepancy(const Instance& instance, const Eigen::VectorXd& coloring) {
    const int n = element_count(instance);
    if (coloring.size() != n) {
        std::ostringstream os;
        os << "coloring has length " << coloring.size() << ", instance has " << n << " elements";
        throw InputError(os.str());
    }
    Discrepancy out;
    if (const auto* ss = std::get_if<SetSystemInstance>(&instance)) {
        out.per_row.resize(ss->rows());
        for (int j = 0; j < ss->rows(); ++j) {
            double sum = 0.0;
            for (int e : ss->sets[j]) sum += coloring[e];
            out.per_row[j] = sum;
        }
    } else {
        out.per_row = std::get<MatrixInstance>(instance).b * coloring;
    }
    out.max_abs = out.per_row.size() == 0 ? 0.0 : out.per_row.cwiseAbs().maxCoeff();
    return out;
}

bool row_is_big(Setting setting, const SparseRow& row, const std::vector<std::uint8_t>& alive,
                double a, int t) {
    if (setting == Setting::BeckFiala) {
        int count = 0;
        for (const auto& e : row) count += alive[e.col];
        // An empty intersection is always small, also when a*t is 0.
        return count > 0 && count >= a * t;
    }
    double mass = 0.0;
    for (const auto& e : row)
        if (alive[e.col]) mass += e.coef * e.coef;
    return mass > a;
}

RowClass classify_rows(const Instance& instance, const WalkState& state, double a) {
    const Setting setting = setting_of(instance);
    const int t = setting == Setting::BeckFiala ? std::get<SetSystemInstance>(instance).t : 0;
    const auto rows = sparse_rows(instance);
    RowClass out;
    for (int j = 0; j < static_cast<int>(rows.size()); ++j) {
        if (row_is_big(setting, rows[j], state.alive, a, t))
            out.big_rows.push_back(j);
        else
            out.small_rows.push_back(j);
    }
    return out;
}

std::optional<long long> activation_step(std::span<const bool> is_big) {
    for (std::size_t k = 0; k < is_big.size(); ++k)
        if (!is_big[k]) return static_cast<long long>(k) + 1;
    return std::nullopt;
}

}  // namespace rwdisc
