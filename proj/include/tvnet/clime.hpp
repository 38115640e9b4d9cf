#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "tvnet/changepoint.hpp"
#include "tvnet/kernel.hpp"
#include "tvnet/lp.hpp"
#include "tvnet/types.hpp"

namespace tvnet::clime {

// Feasibility slack allowed on |Sigma omega - e_j|_inf <= lambda.
inline constexpr double kFeasibilityTol = 1e-9;

/// Thrown when a column program has no feasible point. Carries the smallest
/// lambda that makes that column feasible.
class InfeasibleColumn : public NumericalError {
public:
    InfeasibleColumn(Index column, double lambda, double min_lambda);
    [[nodiscard]] Index column() const noexcept { return column_; }
    [[nodiscard]] double min_feasible_lambda() const noexcept { return min_lambda_; }

private:
    Index column_;
    double min_lambda_;
};

/// min |omega|_1 s.t. |Sigma omega - e_j|_inf <= lambda (j is 0-based).
Vector clime_column(const Matrix& sigma, Index j, double lambda, const lp::Options& opts = {});

/// Smallest lambda for which column j is feasible: min_omega |Sigma omega - e_j|_inf.
double min_feasible_lambda(const Matrix& sigma, Index j);

struct PrecisionEstimate {
    Matrix omega_raw;  // column-wise solutions
    Matrix omega;      // symmetrized
    double t = 0.0;
    double lambda = 0.0;
    double feasibility_gap = 0.0;
    bool reliable = true;
};

/// Keeps, for each pair, the entry of smaller magnitude (the upper-triangle
/// entry on ties).
Matrix symmetrize_min_abs(const Matrix& raw);

/// max_j (|Sigma omega_j - e_j|_inf - lambda)_+
double feasibility_gap(const Matrix& sigma, const Matrix& omega_raw, double lambda);

PrecisionEstimate clime(const Matrix& sigma, double lambda, double t = 0.0, const lp::Options& opts = {});

/// g_jk = 1{|omega_jk| >= u}.
GraphEstimate support(const PrecisionEstimate& est, double u);

// ---------------------------------------------------------------------------

struct PathEntry {
    double t = 0.0;
    CovarianceSource source = CovarianceSource::smoothed;
    bool reliable = true;
    std::optional<PrecisionEstimate> estimate;
    std::string error;  // set when the fit at t failed
};

/// Fits every grid time independently. Within b + h^2 of a detected change
/// point the covariance is reflected; within h^2 the entry is flagged
/// unreliable. A failing t is recorded in its entry and does not stop the path.
std::vector<PathEntry> tv_clime_path(const TimeSeriesPanel& panel, const std::vector<double>& grid,
                                     const kernel::KernelSpec& spec, double lambda,
                                     const changepoint::ChangePointReport& report);

/// Index of the change point whose [s - d, s + d) neighbourhood contains t,
/// or nullopt.
std::optional<Index> change_point_within(const changepoint::ChangePointReport& report, double t, double d);

// ---------------------------------------------------------------------------

struct StabilityOptions {
    int n_subsamples = 20;
    double subsample_fraction = 0.8;
    double instability_cap = 0.05;
    std::uint64_t seed = 0;
};

struct StabilityResult {
    double lambda = 0.0;
    std::vector<double> instability;  // per lambda, raw
    std::vector<double> monotone;     // running supremum from the largest lambda down
    bool capped = false;              // no lambda met the cap; the largest was returned
};

/// Mean over off-diagonal pairs of 2 theta (1 - theta), theta being the
/// fraction of graphs containing the edge.
double edge_instability(const std::vector<BoolMatrix>& graphs);

StabilityResult stability_select_lambda(const TimeSeriesPanel& panel, double t, const kernel::KernelSpec& spec,
                                        const std::vector<double>& lambda_grid, const StabilityOptions& opts);

nlohmann::json sidecar_json(const PrecisionEstimate& est);

}  // namespace tvnet::clime
