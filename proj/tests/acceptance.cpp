// Acceptance checks. Prints one PASS/FAIL line per criterion (criterion 7 has
// one line per invariant) and exits nonzero if any line fails.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "tvnet/changepoint.hpp"
#include "tvnet/clime.hpp"
#include "tvnet/eval.hpp"
#include "tvnet/io.hpp"
#include "tvnet/kernel.hpp"
#include "tvnet/rng.hpp"
#include "tvnet/sim.hpp"

using namespace tvnet;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail) {
    std::printf("%s  %s: %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

void info(const std::string& text) {
    std::printf("      %s\n", text.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

Matrix gaussian(std::mt19937_64& rng, Index n, Index p) {
    std::normal_distribution<double> z;
    Matrix x(n, p);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < p; ++j) x(i, j) = z(rng);
    return x;
}

Matrix random_spd(std::mt19937_64& rng, Index p, double ridge) {
    const Matrix a = gaussian(rng, p, p);
    Matrix s = a * a.transpose() / static_cast<double>(p) + ridge * Matrix::Identity(p, p);
    return 0.5 * (s + s.transpose());
}

std::uint64_t replication_seed(Index r) { return stream_seed(0, "replication", static_cast<std::uint64_t>(r)); }

// Criteria 1 and 2: detection over 100 replications of the simulated design.
eval::CpErrorSummary table_row(Index p) {
    std::vector<changepoint::ChangePointReport> reports;
    std::vector<Index> truth;
    for (Index r = 0; r < 100; ++r) {
        const auto design = sim::build_sim_design(1000, p, 2.0, replication_seed(r));
        truth.assign(design.change_points.begin(), design.change_points.end());
        reports.push_back(changepoint::detect(sim::simulate_panel(design), 0.2, std::nullopt));
    }
    return eval::changepoint_error(reports, truth, 2.0);
}

void criteria_1_2() {
    const auto row50 = table_row(50);
    report(row50.mean_count >= 1.95 && row50.mean_count <= 2.05, "1 detected count (p=50, delta0=2, h=0.2)",
           fmt("mean count %.3f, required [1.95, 2.05]", row50.mean_count));
    const auto row100 = table_row(100);
    const bool ok = row50.mean_abs_distance >= 4 && row50.mean_abs_distance <= 14 && row100.mean_abs_distance >= 3 &&
                    row100.mean_abs_distance <= 13;
    report(ok, "2 mean distance (delta0=2, h=0.2)",
           fmt("p=50: %.3f in [4, 14]; ", row50.mean_abs_distance) +
               fmt("p=100: %.3f in [3, 13]", row100.mean_abs_distance));
    info(fmt("p=100 mean count %.3f", row100.mean_count));
}

Matrix to_matrix(const nlohmann::json& rows) {
    const auto p = static_cast<Index>(rows.size());
    Matrix m(p, p);
    for (Index r = 0; r < p; ++r)
        for (Index c = 0; c < p; ++c) m(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    return m;
}

void criterion_3() {
    std::ifstream in(std::string(TVNET_ORACLE_DIR) + "/clime_reference.json");
    if (!in) {
        report(false, "3 CLIME vs reference LP", "fixture missing");
        return;
    }
    const auto fixture = nlohmann::json::parse(in);
    double worst_gap = 0.0, worst_l1 = 0.0;
    int columns = 0, matrices = 0;
    for (const auto& c : fixture.at("cases")) {
        const Matrix s = to_matrix(c.at("sigma"));
        ++matrices;
        const auto& lambdas = c.at("lambdas");
        for (std::size_t k = 0; k < lambdas.size(); ++k) {
            const double lambda = lambdas[k];
            for (Index j = 0; j < s.rows(); ++j) {
                const Vector w = clime::clime_column(s, j, lambda);
                Vector r = s * w;
                r[j] -= 1.0;
                worst_gap = std::max(worst_gap, r.cwiseAbs().maxCoeff() - lambda);
                const double ref = c.at("l1")[k][static_cast<std::size_t>(j)];
                worst_l1 = std::max(worst_l1, std::abs(w.lpNorm<1>() - ref));
                ++columns;
            }
        }
    }
    report(matrices == 50 && worst_gap <= 1e-9 && worst_l1 <= 1e-6, "3 CLIME vs reference LP",
           std::to_string(matrices) + " matrices, " + std::to_string(columns) + " columns; " +
               fmt("max constraint excess %.2e (<= 1e-9), ", worst_gap) +
               fmt("max |L1 - reference| %.2e (<= 1e-6)", worst_l1));
}

void criterion_4() {
    std::mt19937_64 rng(4);
    double worst = 0.0;
    int cases = 0;
    for (Index p : {2, 3, 5, 8, 12, 16, 20}) {
        for (int k = 0; k < 5; ++k) {
            const Matrix s = random_spd(rng, p, 1.0);
            const auto est = clime::clime(s, 0.0);
            worst = std::max(worst, max_abs(est.omega - s.inverse()));
            ++cases;
        }
    }
    report(worst <= 1e-8, "4 exact inverse at lambda=0 (p <= 20)",
           std::to_string(cases) + fmt(" matrices, max entry error %.2e (<= 1e-8)", worst));
}

void criterion_5() {
    double worst_jump = 0.0;
    for (double delta0 : {1.0, 2.0}) {
        for (std::uint64_t seed : {0u, 1u, 2u}) {
            const auto d = sim::build_sim_design(1000, 50, delta0, seed);
            for (Index c : d.change_points) {
                const Matrix jump = sim::true_covariance(d, c).matrix - sim::true_covariance_left_limit(d, c).matrix;
                worst_jump = std::max(worst_jump, std::abs(max_abs(jump) - 20.0 * std::pow(delta0, 4)));
            }
        }
    }

    // Monte Carlo: D at the last index of the old regime, entrywise mean over
    // replications, against h * 20 delta0^4.
    const double delta0 = 2.0, h = 0.2;
    const int reps = 200;
    const Index n = 1000, p = 50, w = changepoint::window_length(n, h);
    const double target = h * 20.0 * std::pow(delta0, 4);
    std::vector<Index> cps;
    std::vector<Matrix> sum, sum_sq;
    std::vector<double> norm_sum, norm_sq;
    for (int r = 0; r < reps; ++r) {
        const auto d = sim::build_sim_design(n, p, delta0, stream_seed(5, "peak", static_cast<std::uint64_t>(r)));
        if (cps.empty()) {
            cps.assign(d.change_points.begin(), d.change_points.end());
            sum.assign(cps.size(), Matrix::Zero(p, p));
            sum_sq = sum;
            norm_sum.assign(cps.size(), 0.0);
            norm_sq = norm_sum;
        }
        const auto panel = sim::simulate_panel(d);
        for (std::size_t k = 0; k < cps.size(); ++k) {
            const Matrix dm = changepoint::diff_stat(panel, cps[k] - 1, w);
            sum[k] += dm;
            sum_sq[k] += dm.cwiseProduct(dm);
            norm_sum[k] += max_abs(dm);
            norm_sq[k] += max_abs(dm) * max_abs(dm);
        }
    }
    bool ok = worst_jump <= 1e-10;
    std::string detail = fmt("jump error %.2e (<= 1e-10)", worst_jump);
    for (std::size_t k = 0; k < cps.size(); ++k) {
        const Matrix mean = sum[k] / reps;
        Index a = 0, b = 0;
        const double peak = mean.cwiseAbs().maxCoeff(&a, &b);
        const double var = (sum_sq[k](a, b) / reps - mean(a, b) * mean(a, b)) * reps / (reps - 1);
        const double se = std::sqrt(var / reps);
        ok = ok && std::abs(peak - target) <= 3.0 * se;
        detail += "; c=" + std::to_string(cps[k]) + fmt(": |mean D|_inf %.3f", peak) + fmt(" vs %.3f", target) +
                  fmt(" (z %.2f)", (peak - target) / se);

        const double m = norm_sum[k] / reps;
        const double se_norm = std::sqrt((norm_sq[k] / reps - m * m) / (reps - 1));
        info("c=" + std::to_string(cps[k]) + fmt(": mean of |D|_inf %.3f", m) + fmt(" (z %.2f)", (m - target) / se_norm));
    }
    report(ok, "5 jump size and mean peak (delta0=2, h=0.2, 200 reps)", detail);
}

// Criterion 6: AUC at grid points away from and adjacent to the change points.
void criterion_6() {
    const Index n = 1000, p = 50;
    const double lambda = 0.06, b = 0.2;
    const int reps = 10;
    const kernel::KernelSpec spec{kernel::Family::uniform, b};
    const std::vector<double> away{0.1, 0.9}, adjacent{0.3, 0.6, 0.7};
    std::map<double, double> auc, auc_matching;
    std::map<double, int> matching_count;
    for (int r = 0; r < reps; ++r) {
        const auto design = sim::build_sim_design(n, p, 1.0, stream_seed(6, "roc", static_cast<std::uint64_t>(r)));
        const auto panel = sim::simulate_panel(design);
        for (const auto& group : {away, adjacent}) {
            for (double t : group) {
                const auto i = static_cast<Index>(std::lround(t * static_cast<double>(n)));
                const auto est = clime::clime(kernel::smoothed_covariance(panel, t, spec).matrix, lambda, t);
                const auto grid = eval::default_u_grid(est.omega, 200);
                auc[t] += eval::roc_auc(eval::roc_from_estimate(est, sim::true_graph(design, i, 1e-8), grid)) / reps;
                const Matrix omega = sim::checked_inverse(sim::true_covariance(design, i).matrix);
                const auto roc = eval::roc_matching_truth(est, omega, grid);
                if (!roc.empty()) {
                    auc_matching[t] += eval::roc_auc(roc);
                    ++matching_count[t];
                }
            }
        }
    }
    double min_away = 1.0, max_adjacent = 0.0;
    std::string detail = "away";
    for (double t : away) {
        min_away = std::min(min_away, auc[t]);
        detail += fmt(" t=%.1f", t) + fmt(": %.3f", auc[t]);
    }
    detail += "; adjacent";
    for (double t : adjacent) {
        max_adjacent = std::max(max_adjacent, auc[t]);
        detail += fmt(" t=%.1f", t) + fmt(": %.3f", auc[t]);
    }
    const bool ok = min_away > 0.9 && max_adjacent < min_away;
    report(ok, "6 ROC AUC (p=50, lambda=0.06, b=0.2, delta0=1, 10 reps)",
           detail + "; required away > 0.9 and adjacent < min away");
    std::string m = "truth thresholded at matching u:";
    for (const auto& [t, total] : auc_matching) m += fmt(" t=%.1f", t) + fmt(": %.3f", total / matching_count[t]);
    info(m);
}

void criterion_7() {
    std::mt19937_64 rng(7);

    double worst_sum = 0.0;
    for (int k = 0; k < 300; ++k) {
        const Index n = 50 + static_cast<Index>(rng() % 950);
        const double b = 0.02 + 0.4 * std::uniform_real_distribution<double>()(rng);
        const double t = std::uniform_real_distribution<double>()(rng);
        const auto family = static_cast<kernel::Family>(k % 3);
        const auto wv = kernel::kernel_weights(n, t, {family, b});
        worst_sum = std::max(worst_sum, std::abs(wv.weights.sum() - 1.0));
        if ((wv.weights.array() < 0.0).any()) worst_sum = 1.0;
    }
    report(worst_sum <= 1e-12, "7a kernel weights normalize", fmt("max |sum - 1| %.2e over 300 draws", worst_sum));

    double worst_anti = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const Index n = 60 + trial * 7, w = 5 + trial % 9;
        const Matrix x = gaussian(rng, n, 4);
        const TimeSeriesPanel fwd(x), rev(Matrix(x.colwise().reverse()));
        for (Index s = w; s <= n - w; s += 5) {
            const Matrix d = changepoint::diff_stat(fwd, s, w);
            worst_anti = std::max(worst_anti, max_abs(d + changepoint::diff_stat(rev, n - s, w)));
        }
    }
    report(worst_anti <= 1e-12, "7b scan antisymmetry under window swap", fmt("max |D + D_swapped| %.2e", worst_anti));

    double worst_scan = 0.0;
    for (auto [n, p, h] : {std::tuple<Index, Index, double>{500, 6, 0.2}, {400, 10, 0.1}, {250, 4, 0.33}}) {
        const TimeSeriesPanel panel(gaussian(rng, n, p) * 2.0);
        const auto curve = changepoint::scan(panel, h);
        for (std::size_t k = 0; k < curve.grid.size(); ++k) {
            const double naive = max_abs(changepoint::diff_stat(panel, curve.grid[k], curve.window));
            worst_scan = std::max(worst_scan, std::abs(curve.scores[k] - naive));
        }
    }
    report(worst_scan <= 1e-9, "7c sliding scan equals naive scan", fmt("max difference %.2e (<= 1e-9)", worst_scan));

    // Separation with the exclusion radius set to 2 ceil(hn), and with the
    // default radius against that radius.
    bool sep_wide = true, sep_default = true;
    int reports = 0;
    for (int r = 0; r < 10; ++r) {
        const double h = 0.1 + 0.02 * r;
        const auto design = sim::build_sim_design(1000, 20, 1.0 + r % 2, stream_seed(7, "separation", r));
        const auto panel = sim::simulate_panel(design);
        const Index w = changepoint::window_length(1000, h);
        for (auto nu : {std::optional<double>{}, std::optional<double>{0.0}}) {
            const auto wide = changepoint::detect(panel, h, nu, {2 * w});
            const auto narrow = changepoint::detect(panel, h, nu);
            for (std::size_t a = 0; a < wide.points.size(); ++a)
                for (std::size_t c = a + 1; c < wide.points.size(); ++c)
                    sep_wide = sep_wide && std::abs(wide.points[a].index - wide.points[c].index) > 2 * w;
            for (std::size_t a = 0; a < narrow.points.size(); ++a)
                for (std::size_t c = a + 1; c < narrow.points.size(); ++c)
                    sep_default = sep_default &&
                                  std::abs(narrow.points[a].index - narrow.points[c].index) > narrow.exclusion_radius;
            reports += 2;
        }
    }
    report(sep_wide, "7d detection separation > 2 ceil(hn)",
           std::to_string(reports / 2) + " reports with exclusion radius 2 ceil(hn)");
    report(sep_default, "7d' detection separation > default exclusion radius ceil(hn)",
           std::to_string(reports / 2) + " reports");

    bool nested = true;
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix s = random_spd(rng, 8, 0.3);
        const auto est = clime::clime(s, 0.05 + 0.02 * trial);
        const auto grid = eval::default_u_grid(est.omega, 40);
        for (std::size_t k = 1; k < grid.size(); ++k) {
            const BoolMatrix lo = clime::support(est, grid[k - 1]).adjacency;
            const BoolMatrix hi = clime::support(est, grid[k]).adjacency;
            nested = nested && !(hi.array() && !lo.array()).any();
        }
    }
    report(nested, "7e support shrinks as u grows", "10 estimates, 40 thresholds each");

    bool symmetric = true;
    std::bernoulli_distribution coin(0.3);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<GraphEstimate> graphs;
        for (int g = 0; g < 5; ++g) {
            BoolMatrix a(7, 7);
            for (Index j = 0; j < 7; ++j)
                for (Index k = 0; k <= j; ++k) a(j, k) = a(k, j) = coin(rng);
            graphs.push_back({a, 0.0, 0.0});
        }
        const auto d = eval::graph_distance_matrix(graphs);
        symmetric = symmetric && d == d.transpose() && (d.diagonal().array() == 0).all();
    }
    report(symmetric, "7f graph distance matrix is symmetric", "20 sets of 5 graphs");
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& entry : fs::recursive_directory_iterator(dir))
        if (entry.is_regular_file()) files[fs::relative(entry.path(), dir).string()] = io::read_text(entry.path());
    return files;
}

void criterion_8() {
    const fs::path root = fs::temp_directory_path() / "tvnet_acceptance";
    fs::remove_all(root);
    fs::create_directories(root);
    const std::string common = " --n 400 --p 20 --delta0 2 --seed 11 --h 0.2 --replications 3 --grid 0.25,0.5,0.75";
    const fs::path sim_dir = root / "sim";
    const std::string panel = (sim_dir / "panel.csv").string();
    const std::vector<std::pair<std::string, std::string>> commands{
        {"simulate", "simulate" + common},
        {"detect", "detect --input " + panel + " --h 0.2"},
        {"estimate", "estimate --input " + panel + " --h 0.2 --grid 0.25,0.5,0.75 --lambda 0.1"},
        {"evaluate", "evaluate" + common},
        {"rates", "rates --n 1000 --p 50"},
        {"pipeline", "pipeline" + common},
    };
    bool ok = true;
    std::string detail;
    for (const auto& [name, args] : commands) {
        const fs::path out = name == "simulate" ? sim_dir : root / name;
        const std::string cmd = std::string(TVNET_CLI) + " " + args + " --output-dir " + out.string() + " > /dev/null";
        std::map<std::string, std::string> first;
        bool same = true;
        for (int run = 0; run < 2; ++run) {
            if (run == 1) fs::remove_all(out);
            if (std::system(cmd.c_str()) != 0) {
                same = false;
                break;
            }
            if (run == 0) first = snapshot(out);
            else same = first == snapshot(out);
        }
        same = same && !first.empty();
        ok = ok && same;
        detail += (detail.empty() ? "" : ", ") + name + (same ? " identical" : " DIFFERS") + " (" +
                  std::to_string(first.size()) + " files)";
    }
    report(ok, "8 CLI reruns are byte-identical", detail);
    fs::remove_all(root);
}

}  // namespace

int main() {
    criteria_1_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    std::printf("%s\n", failures == 0 ? "ALL PASS" : (std::to_string(failures) + " FAILED").c_str());
    return failures == 0 ? 0 : 1;
}
