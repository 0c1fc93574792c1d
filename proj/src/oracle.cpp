#include "rwdisc/oracle.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "rwdisc/errors.hpp"
#include "rwdisc/rng.hpp"

namespace rwdisc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Number of top free bits that index work items. Fixed, so the witness is
// the same for every thread count.
constexpr int kPrefixBits = 6;

MatrixXd dense_rows(const Instance& instance) {
    const int n = element_count(instance);
    if (const auto* m = std::get_if<MatrixInstance>(&instance)) return m->b;
    const auto& s = std::get<SetSystemInstance>(instance);
    MatrixXd a = MatrixXd::Zero(s.rows(), n);
    for (int j = 0; j < s.rows(); ++j)
        for (int i : s.sets[j]) a(j, i) = 1.0;
    return a;
}

struct TaskResult {
    double value = std::numeric_limits<double>::infinity();
    std::uint64_t mask = 0;  // bit b set: element b + 1 colored -1
};

// Enumerates all colorings whose top `prefix_bits` free bits equal `prefix`.
TaskResult enumerate(const MatrixXd& a, int free_bits, int prefix_bits, std::uint64_t prefix) {
    const int low = free_bits - prefix_bits;
    std::uint64_t mask = prefix << low;
    VectorXd x = VectorXd::Ones(a.cols());
    for (int b = 0; b < free_bits; ++b)
        if (mask >> b & 1U) x[b + 1] = -1.0;
    VectorXd sums = a * x;

    TaskResult best;
    const std::uint64_t count = std::uint64_t{1} << low;
    for (std::uint64_t g = 0;; ++g) {
        const double v = sums.size() ? sums.cwiseAbs().maxCoeff() : 0.0;
        if (v < best.value) {
            best.value = v;
            best.mask = mask;
        }
        if (g + 1 == count) break;
        const int b = std::countr_zero(g + 1);
        const int col = b + 1;
        sums -= (2.0 * x[col]) * a.col(col);
        x[col] = -x[col];
        mask ^= std::uint64_t{1} << b;
    }
    return best;
}

}  // namespace

ColoringResult exact_min_discrepancy(const Instance& instance, unsigned threads) {
    const int n = element_count(instance);
    if (n > kExactOracleMaxN)
        throw InputError("exact oracle refuses n = " + std::to_string(n) + " (cap is " +
                         std::to_string(kExactOracleMaxN) + ")");
    ColoringResult out;
    if (n == 0) {
        out.coloring = VectorXd(0);
        return out;
    }
    const MatrixXd a = dense_rows(instance);
    const int free_bits = n - 1;
    const int prefix_bits = std::min(free_bits, kPrefixBits);
    const std::uint64_t tasks = std::uint64_t{1} << prefix_bits;

    std::vector<TaskResult> results(tasks);
    if (threads == 0) threads = std::max(1U, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, tasks));
    std::atomic<std::uint64_t> next{0};
    auto worker = [&] {
        for (std::uint64_t p = next++; p < tasks; p = next++) results[p] = enumerate(a, free_bits, prefix_bits, p);
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (unsigned w = 0; w < threads; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    std::size_t best = 0;
    for (std::size_t p = 1; p < results.size(); ++p)
        if (results[p].value < results[best].value) best = p;
    out.coloring = VectorXd::Ones(n);
    for (int b = 0; b < free_bits; ++b)
        if (results[best].mask >> b & 1U) out.coloring[b + 1] = -1.0;
    out.value = discrepancy(instance, out.coloring).max_abs;
    return out;
}

ColoringResult random_coloring(const Instance& instance, std::uint64_t seed, int trials) {
    if (trials < 1) throw InputError("random_coloring needs at least one trial");
    const int n = element_count(instance);
    SeqRng rng(seed);
    ColoringResult best;
    best.value = std::numeric_limits<double>::infinity();
    VectorXd x(n);
    for (int k = 0; k < trials; ++k) {
        for (int i = 0; i < n; ++i) x[i] = rng.sign();
        const double v = discrepancy(instance, x).max_abs;
        if (v < best.value) {
            best.value = v;
            best.coloring = x;
        }
    }
    return best;
}

namespace {

constexpr double kPivotTol = 1e-10;
constexpr double kBoundarySlack = 1e-12;

// A nonzero kernel vector by reduced row echelon form with partial pivoting.
VectorXd rref_kernel_vector(MatrixXd a) {
    const Eigen::Index rows = a.rows(), cols = a.cols();
    std::vector<Eigen::Index> pivot_col;
    std::vector<bool> is_pivot(static_cast<std::size_t>(cols), false);
    Eigen::Index r = 0;
    for (Eigen::Index c = 0; c < cols && r < rows; ++c) {
        Eigen::Index piv;
        const double mag = a.col(c).tail(rows - r).cwiseAbs().maxCoeff(&piv);
        if (mag <= kPivotTol) continue;
        piv += r;
        a.row(r).swap(a.row(piv));
        a.row(r) /= a(r, c);
        for (Eigen::Index q = 0; q < rows; ++q)
            if (q != r && a(q, c) != 0.0) a.row(q) -= a(q, c) * a.row(r);
        pivot_col.push_back(c);
        is_pivot[static_cast<std::size_t>(c)] = true;
        ++r;
    }
    Eigen::Index free_col = -1;
    for (Eigen::Index c = 0; c < cols; ++c)
        if (!is_pivot[static_cast<std::size_t>(c)]) {
            free_col = c;
            break;
        }
    if (free_col < 0) return VectorXd(0);
    VectorXd y = VectorXd::Zero(cols);
    y[free_col] = 1.0;
    for (std::size_t q = 0; q < pivot_col.size(); ++q)
        y[pivot_col[q]] = -a(static_cast<Eigen::Index>(q), free_col);
    return y;
}

VectorXd lu_kernel_vector(const MatrixXd& a) {
    Eigen::FullPivLU<MatrixXd> lu(a);
    lu.setThreshold(kPivotTol);
    const MatrixXd ker = lu.kernel();
    if (ker.cols() == 0 || ker.col(0).norm() == 0.0) return VectorXd(0);
    return ker.col(0);
}

bool kernel_ok(const MatrixXd& a, const VectorXd& y) {
    if (y.size() == 0 || y.cwiseAbs().maxCoeff() == 0.0) return false;
    return a.rows() == 0 || (a * y).cwiseAbs().maxCoeff() <= 1e-8 * y.cwiseAbs().maxCoeff();
}

}  // namespace

VectorXd beck_fiala_rounding(const SetSystemInstance& instance) {
    const int n = instance.n;
    const int t = instance.t;
    VectorXd x = VectorXd::Zero(n);
    std::vector<bool> floating(static_cast<std::size_t>(n), true);

    for (;;) {
        std::vector<int> vars;
        for (int i = 0; i < n; ++i)
            if (floating[i]) vars.push_back(i);
        if (vars.empty()) break;
        std::vector<int> col_of(static_cast<std::size_t>(n), -1);
        for (std::size_t c = 0; c < vars.size(); ++c) col_of[vars[c]] = static_cast<int>(c);

        std::vector<int> constrained;
        for (int j = 0; j < instance.rows(); ++j) {
            int cnt = 0;
            for (int i : instance.sets[j]) cnt += floating[i] ? 1 : 0;
            if (cnt > t) constrained.push_back(j);
        }
        if (constrained.empty()) break;

        MatrixXd a = MatrixXd::Zero(static_cast<Eigen::Index>(constrained.size()), static_cast<Eigen::Index>(vars.size()));
        for (std::size_t q = 0; q < constrained.size(); ++q)
            for (int i : instance.sets[constrained[q]])
                if (floating[i]) a(static_cast<Eigen::Index>(q), col_of[i]) = 1.0;

        VectorXd y = rref_kernel_vector(a);
        if (!kernel_ok(a, y)) y = lu_kernel_vector(a);
        if (!kernel_ok(a, y)) throw NumericalError("beck_fiala_rounding: no usable kernel vector");

        // Largest move keeping every floating variable inside [-1, 1].
        double step = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < vars.size(); ++c) {
            const double yc = y[static_cast<Eigen::Index>(c)];
            if (yc == 0.0) continue;
            const double xi = x[vars[c]];
            step = std::min(step, yc > 0.0 ? (1.0 - xi) / yc : (-1.0 - xi) / yc);
        }
        for (std::size_t c = 0; c < vars.size(); ++c) {
            const int i = vars[c];
            x[i] += step * y[static_cast<Eigen::Index>(c)];
            if (std::abs(x[i]) >= 1.0 - kBoundarySlack) {
                x[i] = x[i] > 0.0 ? 1.0 : -1.0;
                floating[i] = false;
            }
        }
    }
    for (int i = 0; i < n; ++i)
        if (floating[i]) x[i] = x[i] < 0.0 ? -1.0 : 1.0;
    return x;
}

}  // namespace rwdisc
