#include "rwdisc/komlos.hpp"

#include <algorithm>
#include <cmath>

#include "rwdisc/errors.hpp"

namespace rwdisc {

namespace {

std::vector<TruncationPrefix> prefixes_from(std::vector<RowEntry> entries, double a, int row_index) {
    std::sort(entries.begin(), entries.end(), [](const RowEntry& l, const RowEntry& r) {
        const double al = std::abs(l.coef), ar = std::abs(r.coef);
        return al != ar ? al < ar : l.col < r.col;
    });
    std::vector<TruncationPrefix> out;
    std::vector<int> included;
    for (std::size_t p = 0; p < entries.size(); ++p) {
        included.push_back(entries[p].col);
        const double mag = std::abs(entries[p].coef);
        const bool last_of_magnitude = p + 1 == entries.size() || std::abs(entries[p + 1].coef) != mag;
        if (last_of_magnitude) {
            TruncationPrefix prefix;
            prefix.row = row_index;
            prefix.threshold = mag;
            prefix.included = included;
            prefix.lambda_equivalent = 4.0 * a / mag;
            out.push_back(std::move(prefix));
        }
    }
    return out;
}

}  // namespace

std::vector<TruncationPrefix> truncation_prefixes(const SparseRow& row,
                                                  const std::vector<std::uint8_t>& alive, double a,
                                                  int row_index) {
    std::vector<RowEntry> entries;
    for (const auto& e : row)
        if (e.coef != 0.0 && alive[e.col]) entries.push_back(e);
    return prefixes_from(std::move(entries), a, row_index);
}

std::vector<TruncationPrefix> truncation_prefixes(const Eigen::VectorXd& row,
                                                  const std::vector<std::uint8_t>& alive, double a,
                                                  int row_index) {
    if (static_cast<Eigen::Index>(alive.size()) != row.size())
        throw InputError("alive mask length does not match row length");
    SparseRow sparse;
    for (int i = 0; i < row.size(); ++i)
        if (row[i] != 0.0) sparse.push_back({i, row[i]});
    return truncation_prefixes(sparse, alive, a, row_index);
}

TruncationPrefix prefix_at(const Eigen::VectorXd& row, double threshold, double a, int row_index) {
    std::vector<RowEntry> entries;
    for (int i = 0; i < row.size(); ++i)
        if (row[i] != 0.0 && std::abs(row[i]) <= threshold) entries.push_back({i, row[i]});
    std::sort(entries.begin(), entries.end(), [](const RowEntry& l, const RowEntry& r) {
        const double al = std::abs(l.coef), ar = std::abs(r.coef);
        return al != ar ? al < ar : l.col < r.col;
    });
    TruncationPrefix prefix;
    prefix.row = row_index;
    prefix.threshold = threshold;
    for (const auto& e : entries) prefix.included.push_back(e.col);
    prefix.lambda_equivalent = threshold > 0.0 ? 4.0 * a / threshold : INFINITY;
    return prefix;
}

Preprocessed preprocess(const MatrixInstance& instance) {
    const int n = instance.cols();
    if (n < 2) throw InputError("l1 preprocessing needs at least two columns");
    Preprocessed out;
    const double ln = std::log(static_cast<double>(n));
    out.l1_threshold = std::sqrt(ln);
    out.surviving_row_bound = static_cast<double>(n) * n / ln;
    for (int j = 0; j < instance.rows(); ++j) {
        if (instance.b.row(j).lpNorm<1>() < out.l1_threshold)
            out.discarded_rows.push_back(j);
        else
            out.kept_rows.push_back(j);
    }
    Eigen::MatrixXd kept(static_cast<Eigen::Index>(out.kept_rows.size()), n);
    for (std::size_t r = 0; r < out.kept_rows.size(); ++r) kept.row(r) = instance.b.row(out.kept_rows[r]);
    // Row removal cannot increase a column norm.
    out.kept = MatrixInstance{std::move(kept)};
    return out;
}

double large_entry_l1(const Eigen::VectorXd& row, const std::vector<std::uint8_t>& alive, double lambda,
                      double a) {
    if (!(lambda > 0.0)) throw InputError("lambda must be positive");
    if (static_cast<Eigen::Index>(alive.size()) != row.size())
        throw InputError("alive mask length does not match row length");
    const double cut = 4.0 * a / lambda;
    double sum = 0.0;
    for (int i = 0; i < row.size(); ++i)
        if (alive[i] && std::abs(row[i]) > cut) sum += std::abs(row[i]);
    return sum;
}

double truncated_discrepancy(const MatrixInstance& instance, const Eigen::VectorXd& coloring,
                             const TruncationPrefix& prefix) {
    if (coloring.size() != instance.cols()) throw InputError("coloring length does not match instance");
    if (prefix.row < 0 || prefix.row >= instance.rows()) throw InputError("prefix row out of range");
    double sum = 0.0;
    for (int i : prefix.included) sum += instance.b(prefix.row, i) * coloring[i];
    return sum;
}

}  // namespace rwdisc
