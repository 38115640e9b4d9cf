#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "tvnet/types.hpp"

namespace tvnet::changepoint {

/// Window length ceil(h n) in samples.
Index window_length(Index n, double h);

/// D(s) = n^{-1} (sum_{i=0}^{w-1} X_{s-i} X_{s-i}^T - sum_{i=1}^{w} X_{s+i} X_{s+i}^T)
/// for the 1-based index s.
Matrix diff_stat(const TimeSeriesPanel& panel, Index s, Index w);

struct ScanCurve {
    std::vector<Index> grid;     // s = w, ..., n - w
    std::vector<double> scores;  // |D(s)|_inf
    double h = 0.0;
    Index window = 0;
    Index n = 0;
};

/// |D(s)|_inf over the full grid using O(p^2) rank-one updates per step.
ScanCurve scan(const TimeSeriesPanel& panel, double h);

struct DetectedPoint {
    Index index = 0;
    double score = 0.0;
};

struct ChangePointReport {
    std::vector<DetectedPoint> points;  // in detection order
    Index iota_hat = 0;
    double nu = 0.0;
    double h = 0.0;
    Index window = 0;
    Index exclusion_radius = 0;
    Index n = 0;
    bool auto_threshold = false;
    std::vector<double> peak_sequence;  // every candidate peak until the grid empties
    std::vector<Index> peak_indices;
    double floor_score = 0.0;  // smallest score on the scan curve

    [[nodiscard]] std::vector<Index> indices() const;
};

struct DetectOptions {
    // Half-width, in samples, of the neighbourhood removed around each
    // detection. Defaults to the window length ceil(h n).
    std::optional<Index> exclusion_radius;
};

/// Recursive argmax with exclusion. The grid is always exhausted so every
/// candidate lands in peak_sequence; points are the leading peaks >= nu.
///
/// With nu = nullopt the threshold comes from the ratio rule applied to the
/// peak sequence closed by the scan curve's minimum score. Fewer than two
/// positive values leave the report empty (nu = +inf).
ChangePointReport detect(const TimeSeriesPanel& panel, double h, std::optional<double> nu,
                         const DetectOptions& opts = {});

/// Runs the recursive argmax/exclusion on an existing scan curve.
ChangePointReport detect_on_curve(const ScanCurve& curve, std::optional<double> nu,
                                  const DetectOptions& opts = {});

struct ThresholdChoice {
    Index iota_hat = 0;
    double nu = 0.0;
};

/// Ratio rule on a nonincreasing peak list: iota = argmax_l peak_l / peak_{l+1}
/// (ties to the smaller l), nu = peak_iota. Trailing zero peaks are ignored.
ThresholdChoice select_threshold(const std::vector<double>& peaks);

nlohmann::json to_json(const ChangePointReport& report);
ChangePointReport report_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Theoretical rates. Every constant is supplied by the caller.

struct RateInputs {
    double n = 0.0;
    double p = 0.0;
    double q = 4.0;        // moment order, > 2
    double A = 1.0;        // dependence decay exponent, > 0
    double M_Xq = 1.0;     // aggregated dependence-adjusted norm
    double N_X = 1.0;      // maximal dependence-adjusted norm
    double kappa_p = 1.0;  // L1 bound on the precision matrix
    double L = 1.0;        // Lipschitz constant of the covariance path
    double C0 = 1.0;
    double C1 = 1.0;
    double C2 = 1.0;
};

enum class RateTarget { h_diamond, b_sharp, b_star, nu_theory, u_sharp, u_star, lambda_sharp, lambda_star };

std::string to_string(RateTarget t);
RateTarget rate_target_from_string(const std::string& name);
const std::vector<RateTarget>& all_rate_targets();

void validate(const RateInputs& in);
double varpi(double q, double A, double n);
double j_rate(const RateInputs& in);
double rate_calculator(const RateInputs& in, RateTarget target);

}  // namespace tvnet::changepoint
