#include "tvnet/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace tvnet::kernel {

std::string to_string(Family f) {
    switch (f) {
        case Family::uniform: return "uniform";
        case Family::triangular: return "triangular";
        case Family::epanechnikov: return "epanechnikov";
    }
    return "unknown";
}

Family family_from_string(std::string_view name) {
    if (name == "uniform") return Family::uniform;
    if (name == "triangular") return Family::triangular;
    if (name == "epanechnikov") return Family::epanechnikov;
    throw InvalidArgument("unknown kernel family '" + std::string(name) +
                          "' (expected uniform, triangular or epanechnikov)");
}

double kernel_eval(const KernelSpec& spec, double u) {
    const double a = std::abs(u);
    if (a > 1.0) return 0.0;
    switch (spec.family) {
        case Family::uniform: return 0.5;
        case Family::triangular: return 1.0 - a;
        case Family::epanechnikov: return 0.75 * (1.0 - a * a);
    }
    return 0.0;
}

WeightVector kernel_weights(Index n, double t, const KernelSpec& spec) {
    if (n < 1) throw InvalidArgument("kernel_weights needs n >= 1");
    if (!(spec.bandwidth > 0.0) || !std::isfinite(spec.bandwidth)) {
        throw InvalidArgument("kernel bandwidth must be positive");
    }
    const double nd = static_cast<double>(n);
    WeightVector out;
    out.t = t;
    out.weights = Vector::Zero(n);
    double total = 0.0;
    for (Index i = 1; i <= n; ++i) {
        const double k = kernel_eval(spec, std::abs(static_cast<double>(i) / nd - t) / spec.bandwidth) /
                         spec.bandwidth;
        if (k > 0.0) {
            out.weights[i - 1] = k;
            total += k;
            if (out.first == 0) out.first = i;
            out.last = i;
        }
    }
    if (!(total > 0.0)) {
        std::ostringstream msg;
        msg << "no grid point carries kernel weight at t=" << t << " with bandwidth b=" << spec.bandwidth;
        throw InvalidArgument(msg.str());
    }
    out.weights /= total;
    return out;
}

namespace {

template <typename RowFn>
Matrix weighted_outer_sum(const WeightVector& w, Index p, RowFn&& row_of) {
    Matrix s = Matrix::Zero(p, p);
    for (Index i = w.first; i <= w.last; ++i) {
        const double wi = w.weights[i - 1];
        if (wi == 0.0) continue;
        const auto x = row_of(i);
        s.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose(), wi);
    }
    Matrix full = s.selfadjointView<Eigen::Lower>();
    return full;
}

}  // namespace

CovarianceSnapshot smoothed_covariance(const TimeSeriesPanel& panel, double t, const KernelSpec& spec) {
    const auto w = kernel_weights(panel.n(), t, spec);
    Matrix s = weighted_outer_sum(w, panel.p(), [&](Index i) { return panel.row(i); });
    return {0.5 * (s + s.transpose()), t, CovarianceSource::smoothed};
}

CovarianceSnapshot reflected_covariance(const TimeSeriesPanel& panel, double t, const KernelSpec& spec,
                                        Index change_point, ReflectOptions opts) {
    const Index n = panel.n();
    if (change_point < 1 || change_point > n) {
        throw InvalidArgument("change point index " + std::to_string(change_point) + " outside [1, " +
                              std::to_string(n) + "]");
    }
    const auto w = kernel_weights(n, t, spec);
    // Side determination uses t snapped to the nearest grid index. A detected
    // index closes the left window, so t landing on it counts as the left side.
    const auto t_index = static_cast<Index>(std::lround(t * static_cast<double>(n)));
    const Index c = change_point;
    const Index side = t_index > c ? 1 : -1;
    auto source_index = [&](Index i) -> Index {
        if ((i - c) * side >= 0) return i;
        const Index mirrored = 2 * c - i;
        if (mirrored >= 1 && mirrored <= n) return mirrored;
        if (!opts.clamp) {
            throw InvalidArgument("reflected index " + std::to_string(mirrored) + " outside [1, " +
                                  std::to_string(n) + "]");
        }
        return std::clamp<Index>(mirrored, 1, n);
    };
    Matrix s = weighted_outer_sum(w, panel.p(), [&](Index i) { return panel.row(source_index(i)); });
    return {0.5 * (s + s.transpose()), t, CovarianceSource::reflected};
}

CovarianceSnapshot reflected_covariance(const TimeSeriesPanel& panel, double t, const KernelSpec& spec,
                                        const std::vector<Index>& change_points, ReflectOptions opts) {
    const double nd = static_cast<double>(panel.n());
    Index chosen = 0;
    int hits = 0;
    for (Index c : change_points) {
        if (std::abs(static_cast<double>(c) / nd - t) <= spec.bandwidth) {
            chosen = c;
            ++hits;
        }
    }
    if (hits != 1) return smoothed_covariance(panel, t, spec);
    return reflected_covariance(panel, t, spec, chosen, opts);
}

}  // namespace tvnet::kernel
