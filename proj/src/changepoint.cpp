#include "tvnet/changepoint.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace tvnet::changepoint {

using nlohmann::json;

Index window_length(Index n, double h) {
    // Guard against h*n landing a hair above an integer in floating point.
    const double hn = h * static_cast<double>(n);
    return static_cast<Index>(std::ceil(hn - 1e-9 * std::max(1.0, hn)));
}

Matrix diff_stat(const TimeSeriesPanel& panel, Index s, Index w) {
    const Index n = panel.n();
    if (w < 1 || s < w || s > n - w) {
        std::ostringstream msg;
        msg << "difference windows overflow the panel: s=" << s << ", w=" << w << ", n=" << n;
        throw InvalidArgument(msg.str());
    }
    const Index p = panel.p();
    Matrix left = Matrix::Zero(p, p);
    Matrix right = Matrix::Zero(p, p);
    for (Index i = 0; i < w; ++i) {
        const auto x = panel.row(s - i);
        left.noalias() += x.transpose() * x;
    }
    for (Index i = 1; i <= w; ++i) {
        const auto x = panel.row(s + i);
        right.noalias() += x.transpose() * x;
    }
    return (left - right) / static_cast<double>(n);
}

ScanCurve scan(const TimeSeriesPanel& panel, double h) {
    const Index n = panel.n();
    const double nd = static_cast<double>(n);
    if (!(h > 1.0 / nd) || !(h < 0.5)) {
        std::ostringstream msg;
        msg << "scan bandwidth h=" << h << " must lie in (1/n, 1/2) with n=" << n;
        throw InvalidArgument(msg.str());
    }
    const Index w = window_length(n, h);
    if (n - 2 * w < 0) throw InvalidArgument("scan grid is empty");

    ScanCurve curve;
    curve.h = h;
    curve.window = w;
    curve.n = n;
    const Index p = panel.p();

    // diff holds n * D(s); only the upper triangle is maintained.
    Matrix diff = diff_stat(panel, w, w) * nd;
    auto rank_one = [&](Index i, double scale) {
        const auto x = panel.row(i);
        for (Index k = 0; k < p; ++k) {
            const double xk = scale * x[k];
            for (Index j = 0; j <= k; ++j) diff(j, k) += x[j] * xk;
        }
    };
    auto score = [&]() {
        double best = 0.0;
        for (Index k = 0; k < p; ++k)
            for (Index j = 0; j <= k; ++j) best = std::max(best, std::abs(diff(j, k)));
        return best / nd;
    };

    for (Index s = w; s <= n - w; ++s) {
        if (s > w) {
            // Moving s-1 -> s: X_s leaves the right window and joins the left,
            // X_{s-w} leaves the left, X_{s+w} joins the right.
            rank_one(s, 2.0);
            rank_one(s - w, -1.0);
            rank_one(s + w, -1.0);
        }
        curve.grid.push_back(s);
        curve.scores.push_back(score());
    }
    return curve;
}

std::vector<Index> ChangePointReport::indices() const {
    std::vector<Index> out;
    out.reserve(points.size());
    for (const auto& pt : points) out.push_back(pt.index);
    return out;
}

ThresholdChoice select_threshold(const std::vector<double>& peaks) {
    std::size_t len = peaks.size();
    while (len > 0 && peaks[len - 1] <= 0.0) --len;
    if (len < 2) {
        throw InvalidArgument("ratio rule needs at least two positive peaks; supply an explicit threshold nu");
    }
    for (std::size_t l = 1; l < len; ++l) {
        if (peaks[l] > peaks[l - 1]) {
            throw InvalidArgument("peak sequence must be nonincreasing");
        }
    }
    std::size_t best = 0;
    double best_ratio = -1.0;
    for (std::size_t l = 0; l + 1 < len; ++l) {
        const double r = peaks[l] / peaks[l + 1];
        if (r > best_ratio) {
            best_ratio = r;
            best = l;
        }
    }
    return {static_cast<Index>(best + 1), peaks[best]};
}

ChangePointReport detect_on_curve(const ScanCurve& curve, std::optional<double> nu, const DetectOptions& opts) {
    ChangePointReport rep;
    rep.h = curve.h;
    rep.window = curve.window;
    rep.n = curve.n;
    rep.exclusion_radius = opts.exclusion_radius.value_or(curve.window);
    if (rep.exclusion_radius < 0) throw InvalidArgument("exclusion radius must be nonnegative");
    rep.auto_threshold = !nu.has_value();

    // Exhaust the grid, recording every successive maximum.
    std::vector<bool> alive(curve.grid.size(), true);
    while (true) {
        std::size_t best = curve.grid.size();
        for (std::size_t k = 0; k < curve.grid.size(); ++k) {
            if (alive[k] && (best == curve.grid.size() || curve.scores[k] > curve.scores[best])) best = k;
        }
        if (best == curve.grid.size()) break;
        const Index s_hat = curve.grid[best];
        rep.peak_sequence.push_back(curve.scores[best]);
        rep.peak_indices.push_back(s_hat);
        for (std::size_t k = 0; k < curve.grid.size(); ++k) {
            if (std::abs(curve.grid[k] - s_hat) <= rep.exclusion_radius) alive[k] = false;
        }
    }

    rep.floor_score = curve.scores.empty() ? 0.0 : *std::min_element(curve.scores.begin(), curve.scores.end());
    if (nu) {
        rep.nu = *nu;
    } else {
        // The exhausted search is closed by the curve minimum, so the last
        // real peak is also compared against the statistic's floor.
        std::vector<double> closed = rep.peak_sequence;
        closed.push_back(rep.floor_score);
        std::size_t positive = 0;
        for (double v : closed) positive += v > 0.0 ? 1 : 0;
        rep.nu = positive >= 2 ? select_threshold(closed).nu : std::numeric_limits<double>::infinity();
    }
    // Early stopping: halt at the first surviving maximum below nu.
    for (std::size_t l = 0; l < rep.peak_sequence.size(); ++l) {
        if (rep.peak_sequence[l] < rep.nu) break;
        rep.points.push_back({rep.peak_indices[l], rep.peak_sequence[l]});
    }
    rep.iota_hat = static_cast<Index>(rep.points.size());
    return rep;
}

ChangePointReport detect(const TimeSeriesPanel& panel, double h, std::optional<double> nu,
                         const DetectOptions& opts) {
    return detect_on_curve(scan(panel, h), nu, opts);
}

json to_json(const ChangePointReport& r) {
    json j;
    j["h"] = r.h;
    j["nu"] = std::isfinite(r.nu) ? json(r.nu) : json(nullptr);
    j["iota_hat"] = r.iota_hat;
    j["n"] = r.n;
    j["window"] = r.window;
    j["exclusion_radius"] = r.exclusion_radius;
    j["auto_threshold"] = r.auto_threshold;
    json pts = json::array();
    for (const auto& p : r.points) pts.push_back({{"index", p.index}, {"score", p.score}});
    j["points"] = std::move(pts);
    j["peak_sequence"] = r.peak_sequence;
    j["peak_indices"] = r.peak_indices;
    j["floor_score"] = r.floor_score;
    return j;
}

ChangePointReport report_from_json(const json& j) {
    try {
        ChangePointReport r;
        r.h = j.at("h").get<double>();
        r.nu = j.at("nu").is_null() ? std::numeric_limits<double>::infinity() : j.at("nu").get<double>();
        r.iota_hat = j.at("iota_hat").get<Index>();
        r.n = j.value("n", Index{0});
        r.window = j.value("window", Index{0});
        r.exclusion_radius = j.value("exclusion_radius", r.window);
        r.auto_threshold = j.value("auto_threshold", false);
        for (const auto& p : j.at("points")) {
            r.points.push_back({p.at("index").get<Index>(), p.at("score").get<double>()});
        }
        r.peak_sequence = j.value("peak_sequence", std::vector<double>{});
        r.peak_indices = j.value("peak_indices", std::vector<Index>{});
        r.floor_score = j.value("floor_score", 0.0);
        if (static_cast<Index>(r.points.size()) != r.iota_hat) {
            throw InvalidArgument("report iota_hat does not match its point list");
        }
        return r;
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("malformed change-point report: ") + e.what());
    }
}

// ---------------------------------------------------------------------------

std::string to_string(RateTarget t) {
    switch (t) {
        case RateTarget::h_diamond: return "h_diamond";
        case RateTarget::b_sharp: return "b_sharp";
        case RateTarget::b_star: return "b_star";
        case RateTarget::nu_theory: return "nu_theory";
        case RateTarget::u_sharp: return "u_sharp";
        case RateTarget::u_star: return "u_star";
        case RateTarget::lambda_sharp: return "lambda_sharp";
        case RateTarget::lambda_star: return "lambda_star";
    }
    return "unknown";
}

const std::vector<RateTarget>& all_rate_targets() {
    static const std::vector<RateTarget> all{RateTarget::h_diamond, RateTarget::b_sharp,    RateTarget::b_star,
                                             RateTarget::nu_theory, RateTarget::u_sharp,    RateTarget::u_star,
                                             RateTarget::lambda_sharp, RateTarget::lambda_star};
    return all;
}

RateTarget rate_target_from_string(const std::string& name) {
    for (auto t : all_rate_targets()) {
        if (to_string(t) == name) return t;
    }
    throw InvalidArgument("unknown rate target '" + name + "'");
}

void validate(const RateInputs& in) {
    if (!(in.q > 2.0)) throw InvalidArgument("moment order q must exceed 2");
    if (!(in.A > 0.0)) throw InvalidArgument("dependence exponent A must be positive");
    if (!(in.n > 1.0)) throw InvalidArgument("n must exceed 1");
    if (!(in.p > 1.0)) throw InvalidArgument("p must exceed 1 (log p enters the rates)");
    if (!(in.M_Xq > 0.0) || !(in.N_X > 0.0) || !(in.kappa_p > 0.0)) {
        throw InvalidArgument("dependence-adjusted norms and kappa_p must be positive");
    }
    if (!(in.L >= 0.0)) throw InvalidArgument("Lipschitz constant L must be nonnegative");
}

double varpi(double q, double A, double n) {
    const double boundary = 0.5 - 1.0 / q;
    if (std::abs(A - boundary) <= 1e-12) return n * std::pow(std::log(n), 1.0 + 2.0 * q);
    if (A > boundary) return n;
    return std::pow(n, q / 2.0 - A * q);
}

double j_rate(const RateInputs& in) {
    return in.M_Xq * std::pow(in.p * varpi(in.q, in.A, in.n), 1.0 / in.q);
}

namespace {

double bandwidth_rate(const RateInputs& in, double power) {
    const double j = j_rate(in);
    return in.C1 * std::pow(j / in.n, power) +
           in.C2 * std::pow(in.N_X, power) * std::pow(in.n, -power / 2.0) * std::pow(std::log(in.p), power / 2.0);
}

}  // namespace

double rate_calculator(const RateInputs& in, RateTarget target) {
    validate(in);
    const double b_sharp = bandwidth_rate(in, 1.0 / 3.0);
    const double b_star = bandwidth_rate(in, 1.0 / 2.0);
    switch (target) {
        case RateTarget::h_diamond:
        case RateTarget::b_sharp: return b_sharp;
        case RateTarget::b_star: return b_star;
        case RateTarget::nu_theory: return (1.0 + in.L) * b_sharp * b_sharp;
        case RateTarget::u_sharp: return in.C0 * in.kappa_p * in.kappa_p * b_sharp * b_sharp;
        case RateTarget::u_star: return in.C0 * in.kappa_p * in.kappa_p * b_star;
        case RateTarget::lambda_sharp: return in.C1 * in.kappa_p * b_sharp * b_sharp;
        case RateTarget::lambda_star: return in.C1 * in.kappa_p * b_star;
    }
    throw InvalidArgument("unknown rate target");
}

}  // namespace tvnet::changepoint
