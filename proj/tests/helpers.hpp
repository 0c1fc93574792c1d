#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "rwdisc/core.hpp"
#include "rwdisc/rng.hpp"

namespace testutil {

inline Eigen::VectorXd vec(std::initializer_list<double> v) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

inline rwdisc::SetSystemInstance sets(int n, std::vector<std::vector<int>> s) {
    return rwdisc::SetSystemInstance::make(n, std::move(s));
}

/// Uniform random unit-column matrix with Gaussian-like entries (sum of uniforms).
inline Eigen::MatrixXd random_unit_columns(int h, int n, std::uint64_t seed) {
    rwdisc::SeqRng rng(seed);
    Eigen::MatrixXd m(h, n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < h; ++i) m(i, j) = rng.uniform() + rng.uniform() + rng.uniform() - 1.5;
        m.col(j) /= m.col(j).norm();
    }
    return m;
}

inline bool close_rel(double a, double b, double rel) {
    return std::abs(a - b) <= rel * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace testutil
