#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "rwdisc/core.hpp"

namespace rwdisc {

/// Entries of one row with |b_ji| <= threshold, in ascending order of
/// magnitude (ties by column index).
struct TruncationPrefix {
    int row = 0;
    double threshold = 0.0;
    std::vector<int> included;
    /// lambda = 4a / threshold for the bigness constant the prefix was built with.
    double lambda_equivalent = 0.0;
};

/// One prefix per distinct nonzero magnitude among alive entries of `row`.
/// Prefixes are nested and returned in increasing threshold order.
std::vector<TruncationPrefix> truncation_prefixes(const Eigen::VectorXd& row,
                                                  const std::vector<std::uint8_t>& alive,
                                                  double a = 6.0, int row_index = 0);

/// Same, over a sparse row (zero entries already dropped).
std::vector<TruncationPrefix> truncation_prefixes(const SparseRow& row,
                                                  const std::vector<std::uint8_t>& alive,
                                                  double a = 6.0, int row_index = 0);

/// Prefix of every entry with |b_ji| <= threshold, alive or not.
TruncationPrefix prefix_at(const Eigen::VectorXd& row, double threshold, double a = 6.0,
                           int row_index = 0);

struct Preprocessed {
    MatrixInstance kept;
    std::vector<int> kept_rows;       ///< original indices of rows in `kept`
    std::vector<int> discarded_rows;  ///< rows with l1-norm < sqrt(ln n)
    double l1_threshold = 0.0;
    /// n^2 / ln n, the count the surviving rows can never exceed.
    double surviving_row_bound = 0.0;
};

/// Drops rows whose l1-norm is below sqrt(ln n). Requires n >= 2.
Preprocessed preprocess(const MatrixInstance& instance);

/// Sum of |b_ji| over alive i with |b_ji| > 4a/lambda.
double large_entry_l1(const Eigen::VectorXd& row, const std::vector<std::uint8_t>& alive,
                      double lambda, double a = 6.0);

/// Signed discrepancy of the prefix's row restricted to its included entries.
double truncated_discrepancy(const MatrixInstance& instance, const Eigen::VectorXd& coloring,
                             const TruncationPrefix& prefix);

}  // namespace rwdisc
