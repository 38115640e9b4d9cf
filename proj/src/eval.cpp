#include "tvnet/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tvnet::eval {

SensSpec sensitivity_specificity(const GraphEstimate& est, const GraphEstimate& truth, bool include_diagonal) {
    if (est.p() != truth.p() || est.adjacency.cols() != truth.adjacency.cols()) {
        throw InvalidArgument("estimated and true graphs differ in dimension");
    }
    const Index p = est.p();
    double tp = 0.0, pos = 0.0, tn = 0.0, neg = 0.0;
    for (Index k = 0; k < p; ++k) {
        for (Index j = 0; j < p; ++j) {
            if (j == k && !include_diagonal) continue;
            const bool g = est.adjacency(j, k);
            if (truth.adjacency(j, k)) {
                pos += 1.0;
                tp += g ? 1.0 : 0.0;
            } else {
                neg += 1.0;
                tn += g ? 0.0 : 1.0;
            }
        }
    }
    SensSpec out;
    if (pos > 0.0) out.sensitivity = tp / pos;
    if (neg > 0.0) out.specificity = tn / neg;
    return out;
}

std::vector<RocPoint> roc_from_estimate(const clime::PrecisionEstimate& est, const GraphEstimate& truth,
                                        const std::vector<double>& u_grid, bool include_diagonal) {
    if (!std::is_sorted(u_grid.begin(), u_grid.end())) throw InvalidArgument("u grid must be sorted increasingly");
    std::vector<RocPoint> out;
    out.reserve(u_grid.size());
    for (double u : u_grid) {
        const auto ss = sensitivity_specificity(clime::support(est, u), truth, include_diagonal);
        if (!ss.sensitivity || !ss.specificity) {
            throw InvalidArgument("true graph has an empty positive or negative class; ROC is undefined");
        }
        out.push_back({u, *ss.sensitivity, 1.0 - *ss.specificity, est.t, est.lambda});
    }
    return out;
}

std::vector<RocPoint> roc_matching_truth(const clime::PrecisionEstimate& est, const Matrix& true_omega,
                                         const std::vector<double>& u_grid, bool include_diagonal) {
    if (!std::is_sorted(u_grid.begin(), u_grid.end())) throw InvalidArgument("u grid must be sorted increasingly");
    if (true_omega.rows() != est.omega.rows() || true_omega.cols() != est.omega.cols()) {
        throw InvalidArgument("true precision matrix differs in dimension");
    }
    std::vector<RocPoint> out;
    for (double u : u_grid) {
        const GraphEstimate truth{(true_omega.array().abs() > u).matrix(), est.t, u};
        const auto ss = sensitivity_specificity(clime::support(est, u), truth, include_diagonal);
        if (!ss.sensitivity || !ss.specificity) continue;
        out.push_back({u, *ss.sensitivity, 1.0 - *ss.specificity, est.t, est.lambda});
    }
    return out;
}

std::vector<RocPoint> roc_sweep(const TimeSeriesPanel& panel, double t, const kernel::KernelSpec& spec,
                                double lambda, const std::vector<double>& u_grid, const sim::SimDesign& truth_design,
                                const RocOptions& opts) {
    if (panel.n() != truth_design.n || panel.p() != truth_design.p) {
        throw InvalidArgument("panel shape does not match the truth design");
    }
    const auto i = std::clamp<Index>(static_cast<Index>(std::lround(t * static_cast<double>(panel.n()))), 1,
                                     panel.n());
    const auto cov = kernel::smoothed_covariance(panel, t, spec);
    const auto est = clime::clime(cov.matrix, lambda, t);
    if (opts.matching_truth) {
        const Matrix omega = sim::checked_inverse(sim::true_covariance(truth_design, i).matrix);
        return roc_matching_truth(est, omega, u_grid, opts.include_diagonal);
    }
    return roc_from_estimate(est, sim::true_graph(truth_design, i, opts.truth_u), u_grid, opts.include_diagonal);
}

double roc_auc(std::vector<RocPoint> points) {
    points.push_back({0, 0.0, 0.0, 0, 0});
    points.push_back({0, 1.0, 1.0, 0, 0});
    std::sort(points.begin(), points.end(), [](const RocPoint& a, const RocPoint& b) {
        return a.one_minus_specificity < b.one_minus_specificity ||
               (a.one_minus_specificity == b.one_minus_specificity && a.sensitivity < b.sensitivity);
    });
    double area = 0.0;
    for (std::size_t k = 1; k < points.size(); ++k) {
        const double dx = points[k].one_minus_specificity - points[k - 1].one_minus_specificity;
        area += 0.5 * dx * (points[k].sensitivity + points[k - 1].sensitivity);
    }
    return area;
}

std::vector<double> default_u_grid(const Matrix& omega, int count) {
    if (count < 2) throw InvalidArgument("u grid needs at least two points");
    const double top = max_abs(omega);
    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(count) + 1);
    for (int k = 0; k < count; ++k) grid.push_back(top * static_cast<double>(k) / static_cast<double>(count - 1));
    grid.push_back(top > 0.0 ? 2.0 * top : 1.0);
    return grid;
}

CpErrorSummary changepoint_error(const std::vector<changepoint::ChangePointReport>& reports,
                                 const std::vector<Index>& truth, double delta0) {
    if (truth.empty()) throw InvalidArgument("change-point truth is empty");
    if (reports.empty()) throw InvalidArgument("need at least one replication");
    CpErrorSummary s;
    s.replications = static_cast<Index>(reports.size());
    s.h = reports.front().h;
    s.delta0 = delta0;
    double count = 0.0, dist = 0.0;
    for (const auto& r : reports) {
        count += static_cast<double>(r.iota_hat);
        double rep = 0.0;
        for (Index tp : truth) {
            double best = std::numeric_limits<double>::infinity();
            if (r.points.empty()) {
                best = static_cast<double>(std::min(std::abs(tp - r.window), std::abs(r.n - r.window - tp)));
            }
            for (const auto& pt : r.points) best = std::min(best, static_cast<double>(std::abs(pt.index - tp)));
            rep += best;
        }
        dist += rep / static_cast<double>(truth.size());
    }
    s.mean_count = count / static_cast<double>(reports.size());
    s.mean_abs_distance = dist / static_cast<double>(reports.size());
    return s;
}

Eigen::MatrixXi graph_distance_matrix(const std::vector<GraphEstimate>& graphs) {
    const auto m = static_cast<Index>(graphs.size());
    Eigen::MatrixXi out = Eigen::MatrixXi::Zero(m, m);
    if (m == 0) return out;
    const Index p = graphs.front().p();
    for (const auto& g : graphs) {
        if (g.p() != p || g.adjacency.cols() != p) throw InvalidArgument("graphs differ in dimension");
    }
    for (Index a = 0; a < m; ++a) {
        for (Index b = a + 1; b < m; ++b) {
            const auto& ga = graphs[static_cast<std::size_t>(a)].adjacency;
            const auto& gb = graphs[static_cast<std::size_t>(b)].adjacency;
            const int diff = static_cast<int>((ga.array() != gb.array()).count());
            out(a, b) = diff;
            out(b, a) = diff;
        }
    }
    return out;
}

nlohmann::json to_json(const CpErrorSummary& s) {
    return {{"mean_count", s.mean_count},
            {"mean_abs_distance", s.mean_abs_distance},
            {"replications", s.replications},
            {"h", s.h},
            {"delta0", s.delta0}};
}

}  // namespace tvnet::eval
