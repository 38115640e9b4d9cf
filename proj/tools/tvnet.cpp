// Command-line front end: simulate | detect | estimate | evaluate | rates | pipeline.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "tvnet/changepoint.hpp"
#include "tvnet/clime.hpp"
#include "tvnet/eval.hpp"
#include "tvnet/io.hpp"
#include "tvnet/kernel.hpp"
#include "tvnet/rng.hpp"
#include "tvnet/sim.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tvnet;

namespace {

json default_config() {
    return {
        {"input", nullptr},
        {"design", nullptr},
        {"report", nullptr},
        {"n", 1000},
        {"p", 50},
        {"delta0", 1.0},
        {"seed", 0},
        {"h", "auto"},
        {"nu", "auto"},
        {"b", 0.2},
        {"kernel", "uniform"},
        {"lambda", 0.06},
        {"u", 1e-6},
        {"grid", {0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8}},
        {"lambda_grid", {0.02, 0.04, 0.06, 0.08, 0.1, 0.12, 0.14, 0.16, 0.18, 0.2}},
        {"stability", {{"n_subsamples", 20}, {"fraction", 0.8}, {"cap", 0.05}}},
        {"replications", 100},
        {"p_values", nullptr},
        {"delta0_values", nullptr},
        {"h_values", nullptr},
        {"roc_points", 200},
        {"include_diagonal", true},
        {"plots", true},
        {"output_dir", "out"},
        {"rates",
         {{"q", 4.0},
          {"A", 1.0},
          {"M_Xq", 1.0},
          {"N_X", 1.0},
          {"kappa_p", 1.0},
          {"L", 1.0},
          {"C0", 1.0},
          {"C1", 1.0},
          {"C2", 1.0}}},
    };
}

// Flags collected as raw strings; only the ones given on the command line
// override the configuration document.
struct Flags {
    std::string config;
    std::map<std::string, std::string> values;
    bool no_plots = false;
};

const char* const kScalarFlags[] = {"input", "design", "report", "n",      "p",          "delta0",
                                    "seed",  "h",      "nu",     "b",      "kernel",     "lambda",
                                    "u",     "grid",   "replications", "output_dir", "lambda_grid",
                                    "p_values", "delta0_values", "h_values"};

void add_common_flags(CLI::App& cmd, Flags& flags) {
    cmd.add_option("--config", flags.config, "JSON configuration document");
    for (const char* key : kScalarFlags) {
        std::string name = key;
        for (auto& ch : name)
            if (ch == '_') ch = '-';
        cmd.add_option("--" + name, flags.values[key], std::string("override '") + key + "'");
    }
    cmd.add_flag("--no-plots", flags.no_plots, "skip SVG output");
}

json parse_list(const std::string& text) {
    json out = json::array();
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) throw InvalidArgument("empty entry in list '" + text + "'");
        out.push_back(std::stod(item));
    }
    return out;
}

json flag_value(const std::string& key, const std::string& raw) {
    static const char* const text_keys[] = {"input", "design", "report", "kernel", "output_dir"};
    for (const char* k : text_keys)
        if (key == k) return raw;
    if (key == "grid" || key == "lambda_grid" || key == "p_values" || key == "delta0_values" || key == "h_values") {
        return parse_list(raw);
    }
    if ((key == "h" || key == "nu") && raw == "auto") return raw;
    if (key == "lambda" && raw == "stability") return raw;
    try {
        std::size_t used = 0;
        if (key == "n" || key == "p" || key == "seed" || key == "replications") {
            const long long v = std::stoll(raw, &used);
            if (used != raw.size()) throw std::invalid_argument(raw);
            return v;
        }
        const double v = std::stod(raw, &used);
        if (used != raw.size()) throw std::invalid_argument(raw);
        return v;
    } catch (const std::logic_error&) {
        throw InvalidArgument("cannot parse --" + key + " value '" + raw + "'");
    }
}

json resolve_config(const Flags& flags, const CLI::App& cmd) {
    json cfg = default_config();
    if (!flags.config.empty()) {
        const json file = io::read_json(flags.config);
        if (!file.is_object()) throw InvalidArgument("configuration must be a JSON object");
        for (const auto& [key, value] : file.items()) {
            if (!cfg.contains(key)) throw InvalidArgument("unknown configuration key '" + key + "'");
            if (key == "rates" || key == "stability") {
                if (!value.is_object()) throw InvalidArgument("'" + key + "' must be an object");
                for (const auto& [sub, v] : value.items()) {
                    if (!cfg[key].contains(sub)) {
                        throw InvalidArgument("unknown configuration key '" + key + "." + sub + "'");
                    }
                    cfg[key][sub] = v;
                }
            } else {
                cfg[key] = value;
            }
        }
    }
    for (const auto& [key, raw] : flags.values) {
        std::string name = key;
        for (auto& ch : name)
            if (ch == '_') ch = '-';
        if (cmd.count("--" + name) > 0) cfg[key] = flag_value(key, raw);
    }
    if (flags.no_plots) cfg["plots"] = false;
    return cfg;
}

// ---------------------------------------------------------------------------
// Typed accessors.

double number(const json& cfg, const std::string& key) {
    const auto& v = cfg.at(key);
    if (!v.is_number()) throw InvalidArgument("configuration '" + key + "' must be a number");
    return v.get<double>();
}

Index integer(const json& cfg, const std::string& key) {
    const auto& v = cfg.at(key);
    if (!v.is_number_integer()) throw InvalidArgument("configuration '" + key + "' must be an integer");
    return v.get<Index>();
}

std::uint64_t seed_of(const json& cfg) {
    const auto& v = cfg.at("seed");
    if (!v.is_number_integer() || v.get<long long>() < 0) {
        throw InvalidArgument("configuration 'seed' must be a nonnegative integer");
    }
    return v.get<std::uint64_t>();
}

std::vector<double> number_list(const json& cfg, const std::string& key) {
    const auto& v = cfg.at(key);
    if (!v.is_array() || v.empty()) throw InvalidArgument("configuration '" + key + "' must be a non-empty list");
    std::vector<double> out;
    for (const auto& x : v) {
        if (!x.is_number()) throw InvalidArgument("configuration '" + key + "' must hold numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

double resolve_h(const json& value, Index n) {
    if (value.is_string() && value.get<std::string>() == "auto") return std::pow(static_cast<double>(n), -0.2);
    if (!value.is_number()) throw InvalidArgument("h must be a number or \"auto\"");
    return value.get<double>();
}

std::optional<double> resolve_nu(const json& cfg) {
    const auto& v = cfg.at("nu");
    if (v.is_string() && v.get<std::string>() == "auto") return std::nullopt;
    if (!v.is_number()) throw InvalidArgument("nu must be a number or \"auto\"");
    return v.get<double>();
}

kernel::KernelSpec kernel_spec(const json& cfg, Index n) {
    const auto& fam = cfg.at("kernel");
    if (!fam.is_string()) throw InvalidArgument("kernel must be a family name");
    kernel::KernelSpec spec{kernel::family_from_string(fam.get<std::string>()), number(cfg, "b")};
    const double nd = static_cast<double>(n);
    if (!(spec.bandwidth > 1.0 / nd) || !(spec.bandwidth < 0.5)) {
        std::ostringstream msg;
        msg << "smoothing bandwidth b=" << spec.bandwidth << " must lie in (1/n, 1/2) with n=" << n;
        throw InvalidArgument(msg.str());
    }
    return spec;
}

bool plots(const json& cfg) { return cfg.at("plots").get<bool>(); }

fs::path output_dir(const json& cfg) {
    const auto& v = cfg.at("output_dir");
    if (!v.is_string() || v.get<std::string>().empty()) throw InvalidArgument("output_dir must be a path");
    return v.get<std::string>();
}

std::string time_tag(double t) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "t%.4f", t);
    return buf;
}

// ---------------------------------------------------------------------------
// Inputs shared by the commands.

sim::SimDesign design_of(const json& cfg) {
    if (!cfg.at("design").is_null()) return sim::design_from_json(io::read_json(cfg.at("design").get<std::string>()));
    return sim::build_sim_design(integer(cfg, "n"), integer(cfg, "p"), number(cfg, "delta0"), seed_of(cfg));
}

TimeSeriesPanel panel_of(const json& cfg) {
    if (!cfg.at("input").is_null()) return io::read_panel_csv(cfg.at("input").get<std::string>());
    return sim::simulate_panel(design_of(cfg));
}

changepoint::ChangePointReport run_detection(const TimeSeriesPanel& panel, const json& cfg, const fs::path& out) {
    const double h = resolve_h(cfg.at("h"), panel.n());
    const auto curve = changepoint::scan(panel, h);
    const auto report = changepoint::detect_on_curve(curve, resolve_nu(cfg));

    json doc = changepoint::to_json(report);
    doc["config"] = cfg;
    io::write_json(out / "report.json", doc);

    std::string csv = "index,score\n";
    for (std::size_t k = 0; k < curve.grid.size(); ++k) {
        csv += std::to_string(curve.grid[k]) + ',' + io::format_number(curve.scores[k]) + '\n';
    }
    io::write_text(out / "scan.csv", csv);
    if (plots(cfg)) {
        io::Series s{"|D(s)|_inf", {}, {}};
        for (std::size_t k = 0; k < curve.grid.size(); ++k) {
            s.x.push_back(static_cast<double>(curve.grid[k]));
            s.y.push_back(curve.scores[k]);
        }
        io::write_text(out / "scan.svg", io::svg_line_plot({s}, "Break size", "index", "max-norm difference"));
    }
    return report;
}

changepoint::ChangePointReport report_for(const TimeSeriesPanel& panel, const json& cfg, const fs::path& out) {
    if (!cfg.at("report").is_null()) {
        return changepoint::report_from_json(io::read_json(cfg.at("report").get<std::string>()));
    }
    return run_detection(panel, cfg, out);
}

void run_estimation(const TimeSeriesPanel& panel, const changepoint::ChangePointReport& report, const json& cfg,
                    const fs::path& out) {
    const auto spec = kernel_spec(cfg, panel.n());
    const auto grid = number_list(cfg, "grid");
    const double u = number(cfg, "u");
    if (!(u >= 0.0)) throw InvalidArgument("support threshold u must be nonnegative");
    const bool stability = cfg.at("lambda").is_string();
    if (stability && cfg.at("lambda").get<std::string>() != "stability") {
        throw InvalidArgument("lambda must be a number or \"stability\"");
    }

    // One fit per grid time; lambda may be chosen per time.
    std::vector<clime::PathEntry> entries;
    json stability_log = json::array();
    if (!stability) {
        entries = clime::tv_clime_path(panel, grid, spec, number(cfg, "lambda"), report);
    } else {
        clime::StabilityOptions opts;
        opts.n_subsamples = cfg.at("stability").at("n_subsamples").get<int>();
        opts.subsample_fraction = cfg.at("stability").at("fraction").get<double>();
        opts.instability_cap = cfg.at("stability").at("cap").get<double>();
        opts.seed = seed_of(cfg);
        const auto lambdas = number_list(cfg, "lambda_grid");
        for (double t : grid) {
            const auto sel = clime::stability_select_lambda(panel, t, spec, lambdas, opts);
            stability_log.push_back({{"t", t},
                                     {"lambda", sel.lambda},
                                     {"capped", sel.capped},
                                     {"instability", sel.instability}});
            if (sel.capped) {
                std::cerr << "warning: no lambda met the instability cap at t=" << t << "; using " << sel.lambda
                          << "\n";
            }
            auto one = clime::tv_clime_path(panel, {t}, spec, sel.lambda, report);
            entries.push_back(std::move(one.front()));
        }
    }

    json rows = json::array();
    std::vector<GraphEstimate> graphs;
    json graph_times = json::array();
    std::size_t failures = 0;
    for (const auto& e : entries) {
        json row = {{"t", e.t}, {"source", to_string(e.source)}, {"reliable", e.reliable}};
        if (!e.estimate) {
            ++failures;
            row["error"] = e.error;
            std::cerr << "estimate at t=" << e.t << " failed: " << e.error << "\n";
            rows.push_back(row);
            continue;
        }
        const auto& est = *e.estimate;
        const auto g = clime::support(est, u);
        const std::string tag = time_tag(e.t);
        io::write_text(out / ("precision_" + tag + ".csv"), io::matrix_csv(est.omega));
        io::write_json(out / ("precision_" + tag + ".json"), clime::sidecar_json(est));
        io::write_text(out / ("edges_" + tag + ".csv"), io::edge_list_csv(g.adjacency, est.omega));
        io::write_text(out / ("adjacency_" + tag + ".csv"), io::adjacency_csv(g.adjacency));
        Index edges = 0;
        for (Index k = 0; k < g.p(); ++k)
            for (Index j = 0; j < k; ++j) edges += g.adjacency(j, k) ? 1 : 0;
        row["lambda"] = est.lambda;
        row["feasibility_gap"] = est.feasibility_gap;
        row["edges"] = edges;
        rows.push_back(row);
        graphs.push_back(g);
        graph_times.push_back(e.t);
    }

    const auto dist = eval::graph_distance_matrix(graphs);
    json dist_rows = json::array();
    std::string dist_csv;
    for (Index a = 0; a < dist.rows(); ++a) {
        json r = json::array();
        for (Index b = 0; b < dist.cols(); ++b) {
            r.push_back(dist(a, b));
            dist_csv += (b ? "," : "") + std::to_string(dist(a, b));
        }
        dist_csv += '\n';
        dist_rows.push_back(r);
    }
    if (dist.rows() > 0) io::write_text(out / "distances.csv", dist_csv);

    json doc = {{"config", cfg},
                {"change_points", report.indices()},
                {"u", u},
                {"estimates", rows},
                {"distance_times", graph_times},
                {"distance_matrix", dist_rows}};
    if (stability) doc["stability"] = stability_log;
    io::write_json(out / "estimate.json", doc);
    if (failures == entries.size()) throw NumericalError("estimation failed at every grid time");
}

void run_evaluation(const json& cfg, const fs::path& out) {
    const auto design = design_of(cfg);
    const Index n = design.n;
    const auto reps = integer(cfg, "replications");
    if (reps < 1) throw InvalidArgument("replications must be at least 1");

    auto values_or = [&](const std::string& list_key, const json& fallback) {
        return cfg.at(list_key).is_null() ? json::array({fallback}) : cfg.at(list_key);
    };
    const json p_values = values_or("p_values", design.p);
    const json delta_values = values_or("delta0_values", design.delta0);
    const json h_values = values_or("h_values", cfg.at("h"));
    const std::vector<Index> truth(design.change_points.begin(), design.change_points.end());

    // Change-point error table: one row per (p, delta0, h).
    json table = json::array();
    for (const auto& pv : p_values) {
        for (const auto& dv : delta_values) {
            const Index p = pv.get<Index>();
            const double delta0 = dv.get<double>();
            std::vector<double> hs;
            for (const auto& hv : h_values) hs.push_back(resolve_h(hv, n));
            std::vector<std::vector<changepoint::ChangePointReport>> reports(hs.size());
            for (Index r = 0; r < reps; ++r) {
                const auto d = sim::build_sim_design(n, p, delta0, stream_seed(design.seed, "replication",
                                                                               static_cast<std::uint64_t>(r)));
                const auto panel = sim::simulate_panel(d);
                for (std::size_t k = 0; k < hs.size(); ++k) {
                    reports[k].push_back(changepoint::detect(panel, hs[k], resolve_nu(cfg)));
                }
            }
            for (std::size_t k = 0; k < hs.size(); ++k) {
                json row = eval::to_json(eval::changepoint_error(reports[k], truth, delta0));
                row["p"] = p;
                table.push_back(row);
            }
        }
    }

    // ROC sweeps and graph distances on the configured design.
    const auto panel = cfg.at("input").is_null() ? sim::simulate_panel(design)
                                                 : io::read_panel_csv(cfg.at("input").get<std::string>());
    if (panel.n() != design.n || panel.p() != design.p) throw InvalidArgument("input panel does not match the design");
    const auto spec = kernel_spec(cfg, n);
    if (cfg.at("lambda").is_string()) throw InvalidArgument("evaluate needs a numeric lambda");
    const double lambda = number(cfg, "lambda");
    const double u = number(cfg, "u");
    const auto roc_points = static_cast<int>(integer(cfg, "roc_points"));
    eval::RocOptions ropts;
    ropts.include_diagonal = cfg.at("include_diagonal").get<bool>();

    std::string roc_csv = "u,sensitivity,one_minus_specificity,t,lambda\n";
    std::vector<io::Series> curves;
    json roc_rows = json::array();
    std::vector<GraphEstimate> estimated, truths;
    for (double t : number_list(cfg, "grid")) {
        const auto i = std::clamp<Index>(static_cast<Index>(std::lround(t * static_cast<double>(n))), 1, n);
        const auto truth_graph = sim::true_graph(design, i, ropts.truth_u);
        const auto est = clime::clime(kernel::smoothed_covariance(panel, t, spec).matrix, lambda, t);
        const auto g = clime::support(est, u);
        const auto ss = eval::sensitivity_specificity(g, truth_graph, ropts.include_diagonal);
        json row = {{"t", t}, {"u", u}};
        row["sensitivity"] = ss.sensitivity ? json(*ss.sensitivity) : json(nullptr);
        row["specificity"] = ss.specificity ? json(*ss.specificity) : json(nullptr);
        estimated.push_back(g);
        truths.push_back(truth_graph);
        // A complete or empty true graph leaves the ROC undefined at this t.
        if (!ss.sensitivity || !ss.specificity) {
            row["auc"] = nullptr;
            roc_rows.push_back(row);
            continue;
        }
        const auto roc = eval::roc_from_estimate(est, truth_graph, eval::default_u_grid(est.omega, roc_points),
                                                 ropts.include_diagonal);
        io::Series s{time_tag(t), {}, {}};
        for (const auto& pt : roc) {
            roc_csv += io::format_number(pt.u) + ',' + io::format_number(pt.sensitivity) + ',' +
                       io::format_number(pt.one_minus_specificity) + ',' + io::format_number(pt.t) + ',' +
                       io::format_number(pt.lambda) + '\n';
            s.x.push_back(pt.one_minus_specificity);
            s.y.push_back(pt.sensitivity);
        }
        row["auc"] = eval::roc_auc(roc);
        roc_rows.push_back(row);
        curves.push_back(std::move(s));
    }
    io::write_text(out / "roc.csv", roc_csv);
    if (plots(cfg)) io::write_text(out / "roc.svg", io::svg_line_plot(curves, "ROC", "1 - specificity", "sensitivity"));

    auto matrix_json = [](const Eigen::MatrixXi& m) {
        json rows = json::array();
        for (Index a = 0; a < m.rows(); ++a) {
            json r = json::array();
            for (Index b = 0; b < m.cols(); ++b) r.push_back(m(a, b));
            rows.push_back(r);
        }
        return rows;
    };
    json doc = {{"config", cfg},
                {"truth", truth},
                {"changepoint_table", table},
                {"roc", roc_rows},
                {"estimated_distance_matrix", matrix_json(eval::graph_distance_matrix(estimated))},
                {"true_distance_matrix", matrix_json(eval::graph_distance_matrix(truths))}};
    io::write_json(out / "evaluation.json", doc);
}

void run_simulation(const json& cfg, const fs::path& out, sim::SimDesign& design, TimeSeriesPanel& panel) {
    design = design_of(cfg);
    panel = sim::simulate_panel(design);
    io::write_text(out / "panel.csv", io::matrix_csv(panel.data()));
    io::write_json(out / "design.json", sim::to_json(design));
}

void run_rates(const json& cfg, const fs::path& out) {
    const auto& r = cfg.at("rates");
    changepoint::RateInputs in;
    in.n = static_cast<double>(integer(cfg, "n"));
    in.p = static_cast<double>(integer(cfg, "p"));
    in.q = r.at("q").get<double>();
    in.A = r.at("A").get<double>();
    in.M_Xq = r.at("M_Xq").get<double>();
    in.N_X = r.at("N_X").get<double>();
    in.kappa_p = r.at("kappa_p").get<double>();
    in.L = r.at("L").get<double>();
    in.C0 = r.at("C0").get<double>();
    in.C1 = r.at("C1").get<double>();
    in.C2 = r.at("C2").get<double>();
    changepoint::validate(in);
    json values = json::object();
    for (auto t : changepoint::all_rate_targets()) values[changepoint::to_string(t)] = changepoint::rate_calculator(in, t);
    json doc = {{"config", cfg},
                {"varpi", changepoint::varpi(in.q, in.A, in.n)},
                {"J", changepoint::j_rate(in)},
                {"rates", values}};
    io::write_json(out / "rates.json", doc);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Change points and time-varying precision networks for multivariate time series"};
    app.require_subcommand(1);
    // --h is the bandwidth, so help is long-form only.
    app.set_help_flag("--help", "print this help message and exit");

    struct Command {
        const char* name;
        const char* help;
        Flags flags;
        CLI::App* app = nullptr;
    };
    std::vector<Command> commands;
    commands.push_back({"simulate", "simulate a panel and write panel.csv + design.json", {}});
    commands.push_back({"detect", "scan for change points: report.json, scan.csv, scan.svg", {}});
    commands.push_back({"estimate", "time-varying precision matrices on the grid", {}});
    commands.push_back({"evaluate", "change-point error tables, ROC curves and graph distances", {}});
    commands.push_back({"rates", "theoretical bandwidth, threshold and penalty rates", {}});
    commands.push_back({"pipeline", "simulate, detect, estimate and evaluate in one run", {}});
    for (auto& c : commands) {
        c.app = app.add_subcommand(c.name, c.help);
        add_common_flags(*c.app, c.flags);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        for (auto& c : commands) {
            if (!c.app->parsed()) continue;
            const json cfg = resolve_config(c.flags, *c.app);
            const fs::path out = output_dir(cfg);
            const std::string name = c.name;
            if (name == "simulate") {
                sim::SimDesign design;
                TimeSeriesPanel panel;
                run_simulation(cfg, out, design, panel);
            } else if (name == "detect") {
                run_detection(panel_of(cfg), cfg, out);
            } else if (name == "estimate") {
                const auto panel = panel_of(cfg);
                run_estimation(panel, report_for(panel, cfg, out), cfg, out);
            } else if (name == "evaluate") {
                run_evaluation(cfg, out);
            } else if (name == "rates") {
                run_rates(cfg, out);
            } else if (name == "pipeline") {
                if (!cfg.at("input").is_null()) throw InvalidArgument("pipeline simulates its own panel; drop 'input'");
                sim::SimDesign design;
                TimeSeriesPanel panel;
                run_simulation(cfg, out, design, panel);
                const auto report = report_for(panel, cfg, out);
                run_estimation(panel, report, cfg, out);
                run_evaluation(cfg, out);
            }
        }
    } catch (const InvalidArgument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 2;
    } catch (const json::exception& e) {
        std::cerr << "error: invalid configuration value: " << e.what() << "\n";
        return 1;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
