#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace rwdisc {

/// Column-norm slack accepted when validating Komlós matrices.
inline constexpr double kColumnNormSlack = 1e-12;

/// A set system on elements [0, n). `t` is the maximum element degree and is
/// always recomputed from `sets`; construct through make().
struct SetSystemInstance {
    int n = 0;
    std::vector<std::vector<int>> sets;
    int t = 0;

    /// Validates index range and duplicate-freeness of every set.
    static SetSystemInstance make(int n, std::vector<std::vector<int>> sets);

    int rows() const { return static_cast<int>(sets.size()); }
    bool operator==(const SetSystemInstance&) const = default;
};

/// Real m x n matrix whose columns have l2-norm at most 1.
struct MatrixInstance {
    Eigen::MatrixXd b;

    static MatrixInstance make(Eigen::MatrixXd b, double norm_slack = kColumnNormSlack);

    int rows() const { return static_cast<int>(b.rows()); }
    int cols() const { return static_cast<int>(b.cols()); }
    bool operator==(const MatrixInstance& other) const {
        return b.rows() == other.b.rows() && b.cols() == other.b.cols() && b == other.b;
    }
};

using Instance = std::variant<SetSystemInstance, MatrixInstance>;

enum class Setting { BeckFiala, Komlos };

Setting setting_of(const Instance& instance);
int element_count(const Instance& instance);
int row_count(const Instance& instance);

/// One nonzero entry of a row: set systems use coefficient 1.
struct RowEntry {
    int col;
    double coef;
};
using SparseRow = std::vector<RowEntry>;

/// Rows of the instance in input order, zero entries dropped.
std::vector<SparseRow> sparse_rows(const Instance& instance);

enum class Mode { PaperFaithful, Practical };

std::string to_string(Mode mode);
Mode mode_from_string(const std::string& name);

struct WalkParams {
    double gamma = 0.0;
    long long t_max = 0;
    double a = 6.0;
    double freeze_threshold = 0.5;
    std::uint64_t seed = 0;
    Mode mode = Mode::Practical;
    /// Practical mode only: a walk that still has alive variables at t_max
    /// continues up to t_max * tmax_extension steps before forced rounding.
    double tmax_extension = 50.0;

    void validate() const;

    /// gamma = 1/(n^2 ln n) (set systems) or 1/n^6 (matrices),
    /// T = (12/gamma^2) ln n, a = 6, threshold 1 - 1/n.
    static WalkParams paper(const Instance& instance, std::uint64_t seed);

    /// gamma = 0.1/sqrt(n), T = ceil((3/gamma^2) ln 2n), threshold 1 - 1/n.
    static WalkParams practical(const Instance& instance, std::uint64_t seed);
};

/// Fractional coloring x in [-1,1]^n together with the alive mask.
struct WalkState {
    Eigen::VectorXd x;
    std::vector<std::uint8_t> alive;
    long long k = 0;
    std::uint64_t seed = 0;

    int n() const { return static_cast<int>(x.size()); }
    int alive_count() const;
    std::vector<int> alive_indices() const;
};

struct RowClass {
    std::vector<int> big_rows;
    std::vector<int> small_rows;
};

struct Discrepancy {
    Eigen::VectorXd per_row;
    double max_abs = 0.0;
};

int max_degree(const SetSystemInstance& instance);

/// Signed row sums of `coloring`; throws InputError on length mismatch.
Discrepancy discrepancy(const Instance& instance, const Eigen::VectorXd& coloring);

/// Set systems: big iff |S cap A| >= a*t. Matrices: big iff sum over alive of b^2 > a.
RowClass classify_rows(const Instance& instance, const WalkState& state, double a);

/// Same rule applied to precomputed sparse rows.
bool row_is_big(Setting setting, const SparseRow& row, const std::vector<std::uint8_t>& alive,
                double a, int t);

/// `is_big[k-1]` is the classification at step k. Returns the first step at
/// which the row is small.
std::optional<long long> activation_step(std::span<const bool> is_big);

}  // namespace rwdisc
