// Command-line driver: solves quantized baselines, runs evaluation sweeps,
// renders OMF-vs-NSNR plots, and prints loss summaries.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ehpc/mdp.hpp"
#include "ehpc/sim.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr const char* kCacheEnvVar = "EHPC_CACHE_DIR";

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) out.push_back(tok);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Config handling
// ---------------------------------------------------------------------------

struct CliOptions {
    std::string config_path;
    std::string preset = "desk";
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string schemes; // comma separated, empty = plan default
    std::string out_dir = "out";
    std::string cache_dir;
    int jobs = 0; // 0 = plan default
};

void check_keys(const json& j, const std::vector<std::string>& allowed,
                const std::string& where) {
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const auto& k : allowed) {
            if (item.key() == k) {
                ok = true;
                break;
            }
        }
        if (!ok) {
            throw std::invalid_argument("config: unknown key '" + item.key() + "' in " +
                                        where);
        }
    }
}

ehpc::GridSpec grid_from_json(const json& j, ehpc::GridSpec base) {
    check_keys(j,
               {"battery_levels", "gamma_levels", "action_levels", "lookahead_levels",
                "gamma_truncation_quantile"},
               "grid");
    base.battery_levels = j.value("battery_levels", base.battery_levels);
    base.gamma_levels = j.value("gamma_levels", base.gamma_levels);
    base.action_levels = j.value("action_levels", base.action_levels);
    base.lookahead_levels = j.value("lookahead_levels", base.lookahead_levels);
    base.gamma_truncation_quantile =
        j.value("gamma_truncation_quantile", base.gamma_truncation_quantile);
    return base;
}

// effective plan = preset defaults, overridden by config file, then by flags
ehpc::EvalPlan plan_from(const CliOptions& opt, json& effective) {
    json cfg = json::object();
    if (!opt.config_path.empty()) {
        std::ifstream in(opt.config_path);
        if (!in) throw std::invalid_argument("cannot open config: " + opt.config_path);
        try {
            in >> cfg;
        } catch (const json::parse_error& e) {
            throw std::invalid_argument("config parse error: " + std::string(e.what()));
        }
    }
    check_keys(cfg,
               {"preset", "families", "nmcr", "nsnr_db", "schemes", "episodes",
                "steps_per_episode", "seed", "cache_dir", "jobs", "agent", "grid_plain",
                "grid_lookahead"},
               "top level");

    const std::string preset = cfg.value("preset", opt.preset);
    ehpc::EvalPlan plan =
        preset == "paper" ? ehpc::EvalPlan::paper() : ehpc::EvalPlan::desk();
    if (preset != "paper" && preset != "desk") {
        throw std::invalid_argument("config: preset must be 'paper' or 'desk'");
    }

    if (cfg.contains("families")) {
        plan.families.clear();
        for (const auto& f : cfg.at("families")) {
            plan.families.push_back(ehpc::family_from_name(f.get<std::string>()));
        }
    }
    if (cfg.contains("nmcr")) plan.nmcr_values = cfg.at("nmcr").get<std::vector<double>>();
    if (cfg.contains("nsnr_db")) {
        plan.nsnr_values_db = cfg.at("nsnr_db").get<std::vector<double>>();
    }
    if (cfg.contains("schemes")) {
        plan.schemes.clear();
        for (const auto& s : cfg.at("schemes")) {
            plan.schemes.push_back(ehpc::scheme_id_from_name(s.get<std::string>()));
        }
    }
    plan.episodes = cfg.value("episodes", plan.episodes);
    plan.steps_per_episode = cfg.value("steps_per_episode", plan.steps_per_episode);
    plan.seed = cfg.value("seed", plan.seed);
    plan.cache_dir = cfg.value("cache_dir", plan.cache_dir);
    plan.jobs = cfg.value("jobs", plan.jobs);
    if (cfg.contains("agent")) {
        const json& a = cfg.at("agent");
        check_keys(a,
                   {"alpha1", "alpha2", "alpha3", "memory_capacity", "minibatch",
                    "epsilon"},
                   "agent");
        plan.agent.alpha1 = a.value("alpha1", plan.agent.alpha1);
        plan.agent.alpha2 = a.value("alpha2", plan.agent.alpha2);
        plan.agent.alpha3 = a.value("alpha3", plan.agent.alpha3);
        plan.agent.memory_capacity = a.value("memory_capacity", plan.agent.memory_capacity);
        plan.agent.minibatch = a.value("minibatch", plan.agent.minibatch);
        plan.agent.epsilon = a.value("epsilon", plan.agent.epsilon);
    }
    if (cfg.contains("grid_plain")) {
        plan.grid_plain = grid_from_json(cfg.at("grid_plain"), plan.grid_plain);
    }
    if (cfg.contains("grid_lookahead")) {
        plan.grid_lookahead = grid_from_json(cfg.at("grid_lookahead"), plan.grid_lookahead);
    }

    // flags take precedence over the config file
    if (opt.seed_set) plan.seed = opt.seed;
    if (!opt.schemes.empty()) {
        plan.schemes.clear();
        for (const auto& name : split_list(opt.schemes)) {
            plan.schemes.push_back(ehpc::scheme_id_from_name(name));
        }
    }
    if (opt.jobs > 0) plan.jobs = opt.jobs;
    if (!opt.cache_dir.empty()) plan.cache_dir = opt.cache_dir;
    if (plan.cache_dir.empty()) {
        if (const char* env = std::getenv(kCacheEnvVar)) plan.cache_dir = env;
    }
    plan.validate();

    // canonical effective config, used for the provenance hash
    effective = json::object();
    effective["preset"] = preset;
    effective["families"] = json::array();
    for (auto f : plan.families) effective["families"].push_back(ehpc::family_name(f));
    effective["nmcr"] = plan.nmcr_values;
    effective["nsnr_db"] = plan.nsnr_values_db;
    effective["schemes"] = json::array();
    for (auto s : plan.schemes) effective["schemes"].push_back(ehpc::scheme_id_name(s));
    effective["episodes"] = plan.episodes;
    effective["steps_per_episode"] = plan.steps_per_episode;
    effective["seed"] = plan.seed;
    effective["agent"] = {{"alpha1", plan.agent.alpha1},
                          {"alpha2", plan.agent.alpha2},
                          {"alpha3", plan.agent.alpha3},
                          {"memory_capacity", plan.agent.memory_capacity},
                          {"minibatch", plan.agent.minibatch},
                          {"epsilon", plan.agent.epsilon}};
    effective["grid_plain"] = {{"battery_levels", plan.grid_plain.battery_levels},
                               {"gamma_levels", plan.grid_plain.gamma_levels},
                               {"action_levels", plan.grid_plain.action_levels}};
    effective["grid_lookahead"] = {
        {"battery_levels", plan.grid_lookahead.battery_levels},
        {"gamma_levels", plan.grid_lookahead.gamma_levels},
        {"action_levels", plan.grid_lookahead.action_levels},
        {"lookahead_levels", plan.grid_lookahead.lookahead_levels}};
    return plan;
}

std::string provenance_line(const json& effective, std::uint64_t seed) {
    return "# config_hash=" + hex64(fnv1a(effective.dump())) +
           " seed=" + std::to_string(seed) + " version=" + kVersion;
}

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

int cmd_solve(const CliOptions& opt) {
    json effective;
    const ehpc::EvalPlan plan = plan_from(opt, effective);

    // one solve per scenario and per baseline mode referenced by the schemes
    std::vector<ehpc::LookaheadMode> modes;
    for (auto s : plan.schemes) {
        const auto mode = ehpc::scheme_baseline_mode(s);
        if (std::find(modes.begin(), modes.end(), mode) == modes.end()) {
            modes.push_back(mode);
        }
    }

    std::printf("%s\n", provenance_line(effective, plan.seed).c_str());
    std::printf("%-12s %6s %8s %-8s %14s %6s\n", "family", "nmcr", "nsnr_db", "mode",
                "gain", "iters");
    for (auto fam : plan.families) {
        for (double nmcr : plan.nmcr_values) {
            for (double nsnr : plan.nsnr_values_db) {
                const auto scenario = ehpc::scenario_from(fam, nmcr, nsnr);
                for (auto mode : modes) {
                    const auto& grid = mode == ehpc::LookaheadMode::None
                                           ? plan.grid_plain
                                           : plan.grid_lookahead;
                    const auto sol =
                        ehpc::solve_or_load(scenario, grid, mode, plan.cache_dir);
                    std::printf("%-12s %6g %8g %-8s %14.8f %6d\n",
                                ehpc::family_name(fam).c_str(), nmcr, nsnr,
                                ehpc::lookahead_name(mode).c_str(), sol.gain,
                                sol.iterations);
                }
            }
        }
    }
    return 0;
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

int cmd_sweep(const CliOptions& opt) {
    json effective;
    const ehpc::EvalPlan plan = plan_from(opt, effective);
    const auto report = ehpc::evaluate(plan);

    fs::create_directories(opt.out_dir);
    const std::string prov = provenance_line(effective, plan.seed);

    {
        std::ofstream out(fs::path(opt.out_dir) / "results.csv");
        out << prov << '\n';
        ehpc::write_csv(report, out);
    }
    {
        std::ofstream out(fs::path(opt.out_dir) / "loss_summary.csv");
        out << prov << '\n';
        ehpc::write_loss_summary(report, out);
    }
    const auto series =
        ehpc::write_series_files(report, (fs::path(opt.out_dir) / "series").string());
    {
        json summary;
        summary["config"] = effective;
        summary["config_hash"] = hex64(fnv1a(effective.dump()));
        summary["version"] = kVersion;
        summary["series_files"] = series;
        summary["losses"] = json::array();
        for (const auto& loss : report.losses) {
            summary["losses"].push_back({{"scheme", ehpc::scheme_id_name(loss.scheme)},
                                         {"average_pct", loss.average_pct},
                                         {"maximum_pct", loss.maximum_pct}});
        }
        std::ofstream out(fs::path(opt.out_dir) / "summary.json");
        out << summary.dump(2) << '\n';
    }
    std::printf("wrote %s/results.csv (%zu rows), loss_summary.csv, summary.json, "
                "%zu series files\n",
                opt.out_dir.c_str(), report.cells.size(), series.size());
    return 0;
}

// ---------------------------------------------------------------------------
// plot
// ---------------------------------------------------------------------------

struct Series {
    std::vector<std::string> columns; // scheme names
    std::vector<double> x;
    std::vector<std::vector<double>> y; // per column
};

bool read_series(const std::string& path, Series& s) {
    std::ifstream in(path);
    if (!in) return false;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto fields = split_list(line);
        if (fields.empty()) continue;
        if (s.columns.empty()) {
            if (fields.size() < 2 || fields[0] != "nsnr_db") return false;
            s.columns.assign(fields.begin() + 1, fields.end());
            s.y.resize(s.columns.size());
            continue;
        }
        if (fields.size() != s.columns.size() + 1) return false;
        s.x.push_back(std::strtod(fields[0].c_str(), nullptr));
        for (std::size_t i = 0; i < s.columns.size(); ++i) {
            s.y[i].push_back(std::strtod(fields[i + 1].c_str(), nullptr));
        }
    }
    return !s.columns.empty() && !s.x.empty();
}

void render_svg(const Series& s, const std::string& title, const std::string& path,
                const std::string& provenance) {
    const double width = 720, height = 480;
    const double ml = 70, mr = 170, mt = 40, mb = 50;
    const double pw = width - ml - mr, ph = height - mt - mb;

    double x_lo = s.x.front(), x_hi = s.x.back();
    if (x_hi <= x_lo) x_hi = x_lo + 1.0;
    // vertical range always covers [0.8, 1.05] so near-optimal curves separate
    double y_lo = 0.8, y_hi = 1.05;
    for (const auto& col : s.y) {
        for (double v : col) {
            y_lo = std::min(y_lo, v);
            y_hi = std::max(y_hi, v);
        }
    }
    const auto px = [&](double x) { return ml + (x - x_lo) / (x_hi - x_lo) * pw; };
    const auto py = [&](double y) { return mt + (y_hi - y) / (y_hi - y_lo) * ph; };

    static const char* kPalette[] = {"#1b6ca8", "#d1495b", "#2e933c", "#e27d00",
                                     "#7b4fa6", "#00798c", "#9c6615", "#444444",
                                     "#c05299", "#5c8001", "#30343f"};

    std::ofstream out(path);
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out << "<!-- " << provenance << " y_range=[" << y_lo << "," << y_hi << "] -->\n";
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << width << " "
        << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out << "<rect width=\"" << width << "\" height=\"" << height
        << "\" fill=\"white\"/>\n";
    out << "<text x=\"" << ml << "\" y=\"24\" font-size=\"15\">" << title
        << "</text>\n";

    // axes and grid
    out << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw
        << "\" height=\"" << ph << "\" fill=\"none\" stroke=\"#333\"/>\n";
    for (double x : s.x) {
        out << "<line x1=\"" << px(x) << "\" y1=\"" << mt + ph << "\" x2=\"" << px(x)
            << "\" y2=\"" << mt + ph + 5 << "\" stroke=\"#333\"/>\n";
        out << "<text x=\"" << px(x) << "\" y=\"" << mt + ph + 20
            << "\" text-anchor=\"middle\">" << x << "</text>\n";
    }
    const double y_step = 0.05;
    for (double y = std::ceil(y_lo / y_step) * y_step; y <= y_hi + 1e-9; y += y_step) {
        out << "<line x1=\"" << ml << "\" y1=\"" << py(y) << "\" x2=\"" << ml + pw
            << "\" y2=\"" << py(y) << "\" stroke=\"#ddd\"/>\n";
        char label[32];
        std::snprintf(label, sizeof(label), "%.2f", y);
        out << "<text x=\"" << ml - 8 << "\" y=\"" << py(y) + 4
            << "\" text-anchor=\"end\">" << label << "</text>\n";
    }
    out << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 12
        << "\" text-anchor=\"middle\">NSNR (dB)</text>\n";
    out << "<text x=\"18\" y=\"" << mt + ph / 2
        << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " << mt + ph / 2
        << ")\">OMF</text>\n";

    // curves and legend
    for (std::size_t i = 0; i < s.columns.size(); ++i) {
        const char* color = kPalette[i % (sizeof(kPalette) / sizeof(kPalette[0]))];
        out << "<polyline fill=\"none\" stroke=\"" << color
            << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t k = 0; k < s.x.size(); ++k) {
            out << px(s.x[k]) << ',' << py(s.y[i][k]) << ' ';
        }
        out << "\"/>\n";
        for (std::size_t k = 0; k < s.x.size(); ++k) {
            out << "<circle cx=\"" << px(s.x[k]) << "\" cy=\"" << py(s.y[i][k])
                << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
        }
        const double ly = mt + 14 + 18.0 * static_cast<double>(i);
        out << "<line x1=\"" << ml + pw + 12 << "\" y1=\"" << ly << "\" x2=\""
            << ml + pw + 36 << "\" y2=\"" << ly << "\" stroke=\"" << color
            << "\" stroke-width=\"1.5\"/>\n";
        out << "<text x=\"" << ml + pw + 42 << "\" y=\"" << ly + 4 << "\">"
            << s.columns[i] << "</text>\n";
    }
    out << "</svg>\n";
}

int cmd_plot(const CliOptions& opt) {
    const fs::path series_dir = fs::path(opt.out_dir) / "series";
    std::vector<std::string> files;
    if (fs::is_directory(series_dir)) {
        for (const auto& entry : fs::directory_iterator(series_dir)) {
            if (entry.path().extension() == ".csv") files.push_back(entry.path().string());
        }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
        std::fprintf(stderr, "plot: no series files under %s\n",
                     series_dir.string().c_str());
        return 1;
    }
    const fs::path plot_dir = fs::path(opt.out_dir) / "plots";
    fs::create_directories(plot_dir);
    int failures = 0;
    for (const auto& file : files) {
        Series s;
        if (!read_series(file, s)) {
            std::fprintf(stderr, "plot: skipping unreadable series %s\n", file.c_str());
            ++failures;
            continue;
        }
        if (s.columns.empty()) {
            std::fprintf(stderr, "plot: no schemes in %s\n", file.c_str());
            ++failures;
            continue;
        }
        const std::string stem = fs::path(file).stem().string();
        const std::string out_path = (plot_dir / (stem + ".svg")).string();
        render_svg(s, stem, out_path, "source=" + fs::path(file).filename().string() +
                                          " version=" + kVersion);
        std::printf("wrote %s\n", out_path.c_str());
    }
    return failures == 0 ? 0 : 1;
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

int cmd_report(const CliOptions& opt) {
    const fs::path csv_path = fs::path(opt.out_dir) / "results.csv";
    std::ifstream in(csv_path);
    if (!in) {
        std::fprintf(stderr, "report: cannot open %s (run sweep first)\n",
                     csv_path.string().c_str());
        return 1;
    }
    struct Agg {
        double sum = 0.0, max = -1e300;
        int n = 0;
    };
    std::map<std::string, Agg> by_scheme;
    std::vector<std::string> order;
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            header_seen = true;
            continue;
        }
        const auto fields = split_list(line);
        if (fields.size() != 9) {
            std::fprintf(stderr, "report: malformed row: %s\n", line.c_str());
            return 1;
        }
        auto& agg = by_scheme[fields[0]];
        if (agg.n == 0) order.push_back(fields[0]);
        const double loss = std::strtod(fields[8].c_str(), nullptr);
        agg.sum += loss;
        agg.max = std::max(agg.max, loss);
        ++agg.n;
    }
    std::printf("%-10s %10s %10s %6s\n", "scheme", "avg_loss%", "max_loss%", "cells");
    for (const auto& name : order) {
        const auto& agg = by_scheme[name];
        std::printf("%-10s %10.3f %10.3f %6d\n", name.c_str(), agg.sum / agg.n, agg.max,
                    agg.n);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Energy-harvesting power-control experiments"};
    app.require_subcommand(1);
    app.fallthrough(); // global flags may follow the subcommand

    CliOptions opt;
    app.add_option("--config", opt.config_path, "JSON experiment config");
    app.add_option("--preset", opt.preset, "scenario/grid preset")
        ->check(CLI::IsMember({"paper", "desk"}));
    auto* seed_opt = app.add_option("--seed", opt.seed, "master RNG seed");
    app.add_option("--schemes", opt.schemes, "comma-separated scheme list");
    app.add_option("--out", opt.out_dir, "output directory (default: out)");
    app.add_option("--cache", opt.cache_dir,
                   std::string("solution cache dir (or env ") + kCacheEnvVar + ")");
    app.add_option("--jobs", opt.jobs, "worker threads over scenario cells");

    auto* solve = app.add_subcommand("solve", "solve and cache quantized baselines");
    auto* sweep = app.add_subcommand("sweep", "run the evaluation sweep, emit CSVs");
    auto* plot = app.add_subcommand("plot", "render OMF-vs-NSNR plots from series files");
    auto* report = app.add_subcommand("report", "print the loss summary from results.csv");

    CLI11_PARSE(app, argc, argv);
    opt.seed_set = seed_opt->count() > 0;

    try {
        if (solve->parsed()) return cmd_solve(opt);
        if (sweep->parsed()) return cmd_sweep(opt);
        if (plot->parsed()) return cmd_plot(opt);
        if (report->parsed()) return cmd_report(opt);
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
