#pragma once

#include <optional>
#include <vector>

#include "json.hpp"

#include "tvnet/changepoint.hpp"
#include "tvnet/clime.hpp"
#include "tvnet/kernel.hpp"
#include "tvnet/sim.hpp"
#include "tvnet/types.hpp"

namespace tvnet::eval {

/// Undefined when the truth has no positives (sensitivity) or no negatives
/// (specificity).
struct SensSpec {
    std::optional<double> sensitivity;
    std::optional<double> specificity;
};

/// Counts over all ordered pairs (j, k), diagonal included unless
/// include_diagonal is false.
SensSpec sensitivity_specificity(const GraphEstimate& est, const GraphEstimate& truth, bool include_diagonal = true);

struct RocPoint {
    double u = 0.0;
    double sensitivity = 0.0;
    double one_minus_specificity = 0.0;
    double t = 0.0;
    double lambda = 0.0;
};

struct RocOptions {
    // Truth is held at the significant edges |omega_jk| > truth_u while the
    // estimate threshold sweeps u_grid.
    double truth_u = 1e-8;
    // Threshold the truth at the same u as the estimate instead. Points where
    // the truth has an empty class are skipped, and the curve need not be
    // monotone.
    bool matching_truth = false;
    bool include_diagonal = true;
};

/// Sweeps the support threshold over u_grid on a single fitted estimate.
std::vector<RocPoint> roc_from_estimate(const clime::PrecisionEstimate& est, const GraphEstimate& truth,
                                        const std::vector<double>& u_grid, bool include_diagonal = true);

/// As above, with the truth |omega_jk| > u re-thresholded at every u.
std::vector<RocPoint> roc_matching_truth(const clime::PrecisionEstimate& est, const Matrix& true_omega,
                                         const std::vector<double>& u_grid, bool include_diagonal = true);

/// One tv-CLIME fit at (t, lambda) by plain kernel smoothing, swept over u_grid.
std::vector<RocPoint> roc_sweep(const TimeSeriesPanel& panel, double t, const kernel::KernelSpec& spec,
                                double lambda, const std::vector<double>& u_grid, const sim::SimDesign& truth_design,
                                const RocOptions& opts = {});

/// Trapezoidal area under (1 - specificity, sensitivity), anchored at (0,0) and (1,1).
double roc_auc(std::vector<RocPoint> points);

/// Evenly spaced thresholds from 0 to max |omega| (inclusive) plus one beyond.
std::vector<double> default_u_grid(const Matrix& omega, int count = 200);

struct CpErrorSummary {
    double mean_count = 0.0;
    double mean_abs_distance = 0.0;
    Index replications = 0;
    double h = 0.0;
    double delta0 = 0.0;
};

/// Per replication: mean over true points of the distance to the nearest
/// estimate. A replication with no estimates charges each true point its
/// distance to the nearest grid edge.
CpErrorSummary changepoint_error(const std::vector<changepoint::ChangePointReport>& reports,
                                 const std::vector<Index>& truth, double delta0 = 0.0);

/// Number of ordered pairs on which each pair of graphs disagrees.
Eigen::MatrixXi graph_distance_matrix(const std::vector<GraphEstimate>& graphs);

nlohmann::json to_json(const CpErrorSummary& s);

}  // namespace tvnet::eval
