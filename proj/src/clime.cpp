#include "tvnet/clime.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tvnet/rng.hpp"

namespace tvnet::clime {

using nlohmann::json;

namespace {

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

void check_sigma(const Matrix& sigma) {
    if (sigma.rows() != sigma.cols() || sigma.rows() == 0) {
        throw InvalidArgument("covariance must be a non-empty square matrix");
    }
    if (!sigma.allFinite()) throw InvalidArgument("covariance has non-finite entries");
}

}  // namespace

InfeasibleColumn::InfeasibleColumn(Index column, double lambda, double min_lambda)
    : NumericalError("CLIME column " + std::to_string(column) + " is infeasible at lambda=" +
                     format_double(lambda) + "; increase lambda to at least " + format_double(min_lambda)),
      column_(column),
      min_lambda_(min_lambda) {}

double min_feasible_lambda(const Matrix& sigma, Index j) {
    check_sigma(sigma);
    const Index p = sigma.rows();
    // Variables (omega+, omega-, tau); minimize tau.
    Matrix a(2 * p, 2 * p + 1);
    a << sigma, -sigma, -Vector::Ones(p), -sigma, sigma, -Vector::Ones(p);
    Vector b = Vector::Zero(2 * p);
    b[j] = 1.0;
    b[p + j] = -1.0;
    Vector c = Vector::Zero(2 * p + 1);
    c[2 * p] = 1.0;
    const auto res = lp::solve(c, a, b);
    if (res.status != lp::Status::optimal) {
        throw NumericalError("auxiliary feasibility program failed: " + lp::to_string(res.status));
    }
    const Vector omega = res.x.head(p) - res.x.segment(p, p);
    Vector r = sigma * omega;
    r[j] -= 1.0;
    return r.cwiseAbs().maxCoeff();
}

Vector clime_column(const Matrix& sigma, Index j, double lambda, const lp::Options& opts) {
    check_sigma(sigma);
    const Index p = sigma.rows();
    if (j < 0 || j >= p) throw InvalidArgument("column index out of range");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidArgument("lambda must be nonnegative");

    Matrix a(2 * p, 2 * p);
    a << sigma, -sigma, -sigma, sigma;
    Vector b = Vector::Constant(2 * p, lambda);
    b[j] += 1.0;
    b[p + j] -= 1.0;
    const Vector c = Vector::Ones(2 * p);

    const auto res = lp::solve(c, a, b, opts);
    switch (res.status) {
        case lp::Status::optimal: break;
        case lp::Status::infeasible: throw InfeasibleColumn(j, lambda, min_feasible_lambda(sigma, j));
        case lp::Status::unbounded: throw NumericalError("CLIME column program reported unbounded");
        case lp::Status::iteration_limit:
            throw NumericalError("CLIME column " + std::to_string(j) + " hit the iteration limit after " +
                                 std::to_string(res.iterations) + " pivots");
    }
    Vector omega = res.x.head(p) - res.x.segment(p, p);
    Vector r = sigma * omega;
    r[j] -= 1.0;
    const double violation = r.cwiseAbs().maxCoeff() - lambda;
    if (violation > kFeasibilityTol) {
        throw NumericalError("CLIME column " + std::to_string(j) + " violates its constraint by " +
                             format_double(violation));
    }
    return omega;
}

Matrix symmetrize_min_abs(const Matrix& raw) {
    if (raw.rows() != raw.cols()) throw InvalidArgument("symmetrize needs a square matrix");
    Matrix out = raw;
    for (Index k = 0; k < raw.cols(); ++k) {
        for (Index j = 0; j < k; ++j) {
            const double upper = raw(j, k);
            const double lower = raw(k, j);
            const double keep = std::abs(upper) <= std::abs(lower) ? upper : lower;
            out(j, k) = keep;
            out(k, j) = keep;
        }
    }
    return out;
}

double feasibility_gap(const Matrix& sigma, const Matrix& omega_raw, double lambda) {
    Matrix r = sigma * omega_raw;
    r.diagonal().array() -= 1.0;
    double gap = 0.0;
    for (Index j = 0; j < r.cols(); ++j) gap = std::max(gap, r.col(j).cwiseAbs().maxCoeff() - lambda);
    return gap;
}

PrecisionEstimate clime(const Matrix& sigma, double lambda, double t, const lp::Options& opts) {
    check_sigma(sigma);
    const Index p = sigma.rows();
    PrecisionEstimate est;
    est.t = t;
    est.lambda = lambda;
    est.omega_raw.resize(p, p);
    std::vector<std::string> failures;
    for (Index j = 0; j < p; ++j) {
        try {
            est.omega_raw.col(j) = clime_column(sigma, j, lambda, opts);
        } catch (const NumericalError& e) {
            failures.emplace_back(e.what());
        }
    }
    if (!failures.empty()) {
        std::string msg = std::to_string(failures.size()) + " of " + std::to_string(p) + " CLIME columns failed:";
        for (const auto& f : failures) msg += "\n  " + f;
        throw NumericalError(msg);
    }
    est.omega = symmetrize_min_abs(est.omega_raw);
    est.feasibility_gap = feasibility_gap(sigma, est.omega_raw, lambda);
    if (est.feasibility_gap > 1e-8) {
        throw NumericalError("CLIME solution violates feasibility by " + format_double(est.feasibility_gap));
    }
    return est;
}

GraphEstimate support(const PrecisionEstimate& est, double u) {
    if (!(u >= 0.0)) throw InvalidArgument("support threshold u must be nonnegative");
    return {(est.omega.array().abs() >= u).matrix(), est.t, u};
}

// ---------------------------------------------------------------------------

std::optional<Index> change_point_within(const changepoint::ChangePointReport& report, double t, double d) {
    if (report.n <= 0) return std::nullopt;
    const double nd = static_cast<double>(report.n);
    std::optional<Index> best;
    double best_dist = 0.0;
    for (const auto& pt : report.points) {
        const double s = static_cast<double>(pt.index) / nd;
        if (t >= s - d && t < s + d) {
            const double dist = std::abs(t - s);
            if (!best || dist < best_dist) {
                best = pt.index;
                best_dist = dist;
            }
        }
    }
    return best;
}

std::vector<PathEntry> tv_clime_path(const TimeSeriesPanel& panel, const std::vector<double>& grid,
                                     const kernel::KernelSpec& spec, double lambda,
                                     const changepoint::ChangePointReport& report) {
    const double b = spec.bandwidth;
    for (double t : grid) {
        if (t < b - 1e-12 || t > 1.0 - b + 1e-12) {
            throw InvalidArgument("evaluation time " + format_double(t) + " outside [b, 1-b] with b=" +
                                  format_double(b));
        }
    }
    if (!report.points.empty() && report.n != panel.n()) {
        throw InvalidArgument("change-point report was computed for n=" + std::to_string(report.n) +
                              " but the panel has n=" + std::to_string(panel.n()));
    }
    const double h2 = report.h * report.h;
    std::vector<PathEntry> out;
    out.reserve(grid.size());
    for (double t : grid) {
        PathEntry entry;
        entry.t = t;
        entry.reliable = !change_point_within(report, t, h2).has_value();
        try {
            CovarianceSnapshot cov;
            if (const auto cp = change_point_within(report, t, b + h2)) {
                cov = kernel::reflected_covariance(panel, t, spec, *cp);
            } else {
                cov = kernel::smoothed_covariance(panel, t, spec);
            }
            entry.source = cov.source;
            auto est = clime(cov.matrix, lambda, t);
            est.reliable = entry.reliable;
            entry.estimate = std::move(est);
        } catch (const std::exception& e) {
            entry.error = e.what();
        }
        out.push_back(std::move(entry));
    }
    return out;
}

// ---------------------------------------------------------------------------

double edge_instability(const std::vector<BoolMatrix>& graphs) {
    if (graphs.empty()) throw InvalidArgument("instability needs at least one graph");
    const Index p = graphs.front().rows();
    if (p < 2) return 0.0;
    const double count = static_cast<double>(graphs.size());
    double total = 0.0;
    for (Index k = 0; k < p; ++k) {
        for (Index j = 0; j < k; ++j) {
            double hits = 0.0;
            for (const auto& g : graphs) hits += (g(j, k) || g(k, j)) ? 1.0 : 0.0;
            const double theta = hits / count;
            total += 2.0 * theta * (1.0 - theta);
        }
    }
    return total / (0.5 * static_cast<double>(p) * static_cast<double>(p - 1));
}

StabilityResult stability_select_lambda(const TimeSeriesPanel& panel, double t, const kernel::KernelSpec& spec,
                                        const std::vector<double>& lambda_grid, const StabilityOptions& opts) {
    if (lambda_grid.empty()) throw InvalidArgument("lambda grid is empty");
    if (!std::is_sorted(lambda_grid.begin(), lambda_grid.end())) {
        throw InvalidArgument("lambda grid must be sorted increasingly");
    }
    if (opts.n_subsamples < 2) throw InvalidArgument("stability selection needs at least 2 subsamples");
    if (!(opts.subsample_fraction > 0.0) || opts.subsample_fraction > 1.0) {
        throw InvalidArgument("subsample fraction must lie in (0, 1]");
    }

    const auto w = kernel::kernel_weights(panel.n(), t, spec);
    const Index window = w.last - w.first + 1;
    const Index len = std::clamp<Index>(
        static_cast<Index>(std::lround(opts.subsample_fraction * static_cast<double>(window))), 2, window);
    Rng rng = make_stream(opts.seed, "stability");
    std::uniform_int_distribution<Index> start_dist(w.first, w.last - len + 1);

    const Index p = panel.p();
    std::vector<std::vector<BoolMatrix>> graphs(lambda_grid.size());
    for (int s = 0; s < opts.n_subsamples; ++s) {
        const Index start = start_dist(rng);
        Matrix sigma = Matrix::Zero(p, p);
        double mass = 0.0;
        for (Index i = start; i < start + len; ++i) {
            const double wi = w.weights[i - 1];
            if (wi == 0.0) continue;
            const auto x = panel.row(i);
            sigma.noalias() += wi * x.transpose() * x;
            mass += wi;
        }
        if (!(mass > 0.0)) throw NumericalError("subsample carries no kernel weight");
        sigma /= mass;
        sigma = 0.5 * (sigma + sigma.transpose());
        for (std::size_t k = 0; k < lambda_grid.size(); ++k) {
            const auto est = clime(sigma, lambda_grid[k], t);
            graphs[k].push_back((est.omega.array() != 0.0).matrix());
        }
    }

    StabilityResult res;
    res.instability.reserve(lambda_grid.size());
    for (const auto& g : graphs) res.instability.push_back(edge_instability(g));
    res.monotone = res.instability;
    for (std::size_t k = res.monotone.size() - 1; k-- > 0;) {
        res.monotone[k] = std::max(res.monotone[k], res.monotone[k + 1]);
    }
    for (std::size_t k = 0; k < lambda_grid.size(); ++k) {
        if (res.monotone[k] <= opts.instability_cap) {
            res.lambda = lambda_grid[k];
            return res;
        }
    }
    res.lambda = lambda_grid.back();
    res.capped = true;
    return res;
}

json sidecar_json(const PrecisionEstimate& est) {
    return {{"t", est.t},
            {"lambda", est.lambda},
            {"feasibility_gap", est.feasibility_gap},
            {"reliable", est.reliable}};
}

}  // namespace tvnet::clime
