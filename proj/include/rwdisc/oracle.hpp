#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "rwdisc/core.hpp"

namespace rwdisc {

inline constexpr int kExactOracleMaxN = 24;

struct ColoringResult {
    double value = 0.0;  ///< max row |discrepancy|
    Eigen::VectorXd coloring;
};

/// Exhaustive minimum over all colorings with x(0) = +1 (a global flip does
/// not change the value). Refuses n > kExactOracleMaxN. `threads` = 0 picks
/// the hardware concurrency. The witness is the first minimizer in Gray-code
/// order of the lowest-numbered work item, independent of thread count.
ColoringResult exact_min_discrepancy(const Instance& instance, unsigned threads = 0);

/// Best of `trials` uniform colorings drawn from `seed`.
ColoringResult random_coloring(const Instance& instance, std::uint64_t seed, int trials);

/// Kernel-walk iterated rounding; output discrepancy is at most 2t - 1.
Eigen::VectorXd beck_fiala_rounding(const SetSystemInstance& instance);

}  // namespace rwdisc
