#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "json.hpp"

#include "tvnet/types.hpp"

namespace tvnet::sim {

inline constexpr Index kDefaultLagCap = 100;
inline constexpr Index kDefaultBlockSize = 5;
inline constexpr Index kJumpSupport = 20;
inline constexpr double kSoftThreshold = 0.05;
inline constexpr double kIncrement = 0.03;

/// One edit to B_1 applied when stepping from time i-1 to time i.
struct CoefficientEdit {
    enum class Kind : std::uint8_t { soft_threshold, increase };
    Index step = 0;   // time index i >= 2 at which the edit first applies
    Kind kind = Kind::soft_threshold;
    Index block = 0;  // 0-based diagonal block
    Index row = 0;    // 0-based position inside the block
    Index col = 0;
};

/// Block-diagonal p x p matrix stored as its diagonal blocks.
struct BlockDiagonal {
    std::vector<Matrix> blocks;

    [[nodiscard]] Matrix dense() const;
    // y = B * x, x and y of length p.
    void apply_add(const Eigen::Ref<const Vector>& x, double scale, Eigen::Ref<Vector> y) const;
};

/// Piecewise locally stationary vector MA(lag_cap) design.
///
/// X_i = sum_{m=0}^{lag_cap} A_m(i) eps_{i-m} with A_m(i) = (1+m)^{-beta} B_m(i)
/// for m >= 1. Only B_1 evolves over time, through `edits`. A_0(i) equals
/// alpha alpha^T for change_points[0] <= i < change_points[1] and 0 otherwise.
struct SimDesign {
    Index n = 0;
    Index p = 0;
    Index lag_cap = kDefaultLagCap;
    double beta = 1.0;
    Index block_size = kDefaultBlockSize;
    double delta0 = 1.0;
    int df = 8;
    std::uint64_t seed = 0;
    std::array<Index, 2> change_points{};
    Vector alpha;
    std::vector<BlockDiagonal> base;  // B_m(1) for m = 1..lag_cap (base[m-1])
    std::vector<CoefficientEdit> edits;  // ordered by step

    [[nodiscard]] double decay(Index m) const;
    [[nodiscard]] bool jump_active(Index i) const noexcept {
        return i >= change_points[0] && i < change_points[1];
    }
    // B_1(i), replaying the edit log from i = 1.
    [[nodiscard]] BlockDiagonal b1_at(Index i) const;
    // A_m(i) as a dense matrix (m = 0 gives the jump term).
    [[nodiscard]] Matrix coefficient(Index m, Index i) const;
};

/// Applies the step-i edits of `design` to `b1` (which must hold B_1(i-1)).
void apply_edits(const SimDesign& design, Index step, BlockDiagonal& b1);

SimDesign build_sim_design(Index n, Index p, double delta0, std::uint64_t seed);

/// Student-t(df) draws scaled by sqrt((df-2)/df) to unit variance, filled row by row.
Matrix standardized_t_innovations(int df, Index rows, Index cols, std::uint64_t seed);

TimeSeriesPanel simulate_panel(const SimDesign& design);

/// Sigma(t_i) = sum_m A_m(i) A_m(i)^T.
CovarianceSnapshot true_covariance(const SimDesign& design, Index i);

/// Covariance just before the jump term switches at i: A_0 taken from step
/// i-1, every other coefficient from step i. Differencing against
/// true_covariance(i) isolates the abrupt change from the smooth evolution.
CovarianceSnapshot true_covariance_left_limit(const SimDesign& design, Index i);

/// Omega(t_i) = Sigma(t_i)^{-1}; edge (j,k) iff |omega_jk| > u.
GraphEstimate true_graph(const SimDesign& design, Index i, double u);

/// Graph of a given covariance matrix; throws NumericalError when the
/// condition number exceeds 1e12.
GraphEstimate graph_from_covariance(const Matrix& sigma, double t, double u);
Matrix checked_inverse(const Matrix& sigma);

/// Closed-form bound on |Sigma(t_{i+1}) - Sigma(t_i)|_inf from the A_1 edits
/// at step i+1: with E = A_1(i+1) - A_1(i) and e = max row L1 norm of E,
/// 2 |A_1(i)|_max e + |E|_max e.
double evolution_step_bound(const SimDesign& design, Index i);

nlohmann::json to_json(const SimDesign& design);
SimDesign design_from_json(const nlohmann::json& j);

}  // namespace tvnet::sim
