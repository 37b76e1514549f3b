#include "ehpc/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace ehpc {

// ---------------------------------------------------------------------------
// Scheme catalogue
// ---------------------------------------------------------------------------

namespace {

struct SchemeInfo {
    SchemeId id;
    const char* name;
    bool learned;
    LookaheadMode mode;
    SchemeId baseline;
    PolicyKind kind;    // learned only
    Scheme agent_scheme; // learned only
};

const SchemeInfo kSchemes[] = {
    {SchemeId::Opt, "OPT", false, LookaheadMode::None, SchemeId::Opt,
     PolicyKind::Optimistic, Scheme::Online},
    {SchemeId::Oca, "OCA", true, LookaheadMode::None, SchemeId::Opt,
     PolicyKind::Optimistic, Scheme::Online},
    {SchemeId::Rca, "RCA", true, LookaheadMode::None, SchemeId::Opt,
     PolicyKind::Robust, Scheme::Online},
    {SchemeId::ElkOpt, "ELK-OPT", false, LookaheadMode::Energy, SchemeId::ElkOpt,
     PolicyKind::Optimistic, Scheme::EnergyLookahead},
    {SchemeId::ElkOca, "ELK-OCA", true, LookaheadMode::Energy, SchemeId::ElkOpt,
     PolicyKind::Optimistic, Scheme::EnergyLookahead},
    {SchemeId::ElkRca, "ELK-RCA", true, LookaheadMode::Energy, SchemeId::ElkOpt,
     PolicyKind::Robust, Scheme::EnergyLookahead},
    {SchemeId::ClkOpt, "CLK-OPT", false, LookaheadMode::Channel, SchemeId::ClkOpt,
     PolicyKind::Optimistic, Scheme::ChannelLookahead},
    {SchemeId::ClkOca, "CLK-OCA", true, LookaheadMode::Channel, SchemeId::ClkOpt,
     PolicyKind::Optimistic, Scheme::ChannelLookahead},
    {SchemeId::ClkRca, "CLK-RCA", true, LookaheadMode::Channel, SchemeId::ClkOpt,
     PolicyKind::Robust, Scheme::ChannelLookahead},
    {SchemeId::EclkOca, "ECLK-OCA", true, LookaheadMode::Channel, SchemeId::ClkOpt,
     PolicyKind::Optimistic, Scheme::EnergyChannelLookahead},
    {SchemeId::EclkRca, "ECLK-RCA", true, LookaheadMode::Channel, SchemeId::ClkOpt,
     PolicyKind::Robust, Scheme::EnergyChannelLookahead},
};

const SchemeInfo& info(SchemeId s) { return kSchemes[static_cast<int>(s)]; }

} // namespace

std::string scheme_id_name(SchemeId s) { return info(s).name; }

SchemeId scheme_id_from_name(const std::string& name) {
    for (const auto& si : kSchemes) {
        if (name == si.name) return si.id;
    }
    throw std::invalid_argument("unknown scheme: " + name);
}

const std::vector<SchemeId>& all_scheme_ids() {
    static const std::vector<SchemeId> ids = [] {
        std::vector<SchemeId> v;
        for (const auto& si : kSchemes) v.push_back(si.id);
        return v;
    }();
    return ids;
}

bool scheme_is_learned(SchemeId s) { return info(s).learned; }
LookaheadMode scheme_baseline_mode(SchemeId s) { return info(s).mode; }
SchemeId scheme_baseline(SchemeId s) { return info(s).baseline; }

PolicyKind scheme_policy_kind(SchemeId s) {
    if (!info(s).learned) throw std::logic_error("scheme has no agent kind");
    return info(s).kind;
}

Scheme scheme_agent_scheme(SchemeId s) {
    if (!info(s).learned) throw std::logic_error("scheme has no agent");
    return info(s).agent_scheme;
}

// ---------------------------------------------------------------------------
// Plans
// ---------------------------------------------------------------------------

EvalPlan EvalPlan::paper() {
    EvalPlan plan;
    plan.families = {ArrivalFamily::Bernoulli, ArrivalFamily::Exponential,
                     ArrivalFamily::Uniform};
    plan.nmcr_values = {0.1, 0.5, 0.9};
    plan.nsnr_values_db = {0, 5, 10, 15, 20, 25, 30};
    plan.schemes = all_scheme_ids();
    plan.episodes = 1000;
    plan.steps_per_episode = 10000;
    plan.grid_plain = GridSpec::paper(LookaheadMode::None);
    plan.grid_lookahead = GridSpec::paper(LookaheadMode::Energy);
    return plan;
}

EvalPlan EvalPlan::desk() {
    EvalPlan plan = paper();
    plan.nsnr_values_db = {0, 10, 20, 30};
    plan.episodes = 50;
    plan.steps_per_episode = 5000;
    plan.grid_plain = GridSpec::desk(LookaheadMode::None);
    plan.grid_lookahead = GridSpec::desk(LookaheadMode::Energy);
    return plan;
}

void EvalPlan::validate() const {
    if (families.empty() || nmcr_values.empty() || nsnr_values_db.empty()) {
        throw std::invalid_argument("plan: empty scenario grid");
    }
    if (schemes.empty()) throw std::invalid_argument("plan: no schemes selected");
    if (episodes < 1 || steps_per_episode < 1) {
        throw std::invalid_argument("plan: episodes and steps must be >= 1");
    }
    for (double v : nmcr_values) {
        if (!(v > 0.0) || !(v < 1.0)) {
            throw std::invalid_argument("plan: NMCR must lie in (0, 1)");
        }
    }
    if (jobs < 1) throw std::invalid_argument("plan: jobs must be >= 1");
}

// ---------------------------------------------------------------------------
// Episodes
// ---------------------------------------------------------------------------

double run_episode(const PolicySolution& table, Environment& env, long steps,
                   Rng& env_rng) {
    env.reset(env_rng);
    double total = 0.0;
    for (long t = 0; t < steps; ++t) {
        const double u = evaluate_policy_table(table, env.state());
        total += env.step(u, env_rng);
    }
    return total / static_cast<double>(steps);
}

double run_episode(Agent& agent, Environment& env, long steps, Rng& env_rng,
                   Rng& agent_rng, bool learning) {
    env.reset(env_rng);
    double total = 0.0;
    for (long t = 0; t < steps; ++t) {
        if (learning) {
            total += agent.agent_step(env, env_rng, agent_rng);
        } else {
            total += env.step(agent.policy_action(env.state()), env_rng);
        }
    }
    return total / static_cast<double>(steps);
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

namespace {

struct CellStats {
    double mean = 0.0;
    double std_error = 0.0;
};

CellStats stats_of(const std::vector<double>& episode_means) {
    CellStats s;
    const auto n = static_cast<double>(episode_means.size());
    for (double m : episode_means) s.mean += m;
    s.mean /= n;
    if (episode_means.size() > 1) {
        double ss = 0.0;
        for (double m : episode_means) ss += (m - s.mean) * (m - s.mean);
        s.std_error = std::sqrt(ss / (n - 1.0) / n);
    }
    return s;
}

// stable per-(scenario, scheme) stream keys
std::uint64_t env_key(std::size_t scenario_index) {
    return 0x10000 + scenario_index;
}
std::uint64_t agent_key(std::size_t scenario_index, SchemeId s) {
    return 0x20000 + scenario_index * 64 + static_cast<std::uint64_t>(s);
}

struct ScenarioCell {
    ArrivalFamily family;
    double nmcr;
    double nsnr_db;
};

} // namespace

EvalReport evaluate(const EvalPlan& plan) {
    plan.validate();

    std::vector<ScenarioCell> scenarios;
    for (ArrivalFamily fam : plan.families) {
        for (double nmcr : plan.nmcr_values) {
            for (double nsnr : plan.nsnr_values_db) {
                scenarios.push_back({fam, nmcr, nsnr});
            }
        }
    }

    // run set: requested schemes plus any missing matched baselines
    std::vector<SchemeId> run_set = plan.schemes;
    for (SchemeId s : plan.schemes) {
        const SchemeId base = scheme_baseline(s);
        if (std::find(run_set.begin(), run_set.end(), base) == run_set.end()) {
            run_set.push_back(base);
        }
    }

    struct ScenarioResult {
        std::map<SchemeId, CellStats> stats;
    };
    std::vector<ScenarioResult> results(scenarios.size());

    auto worker = [&](std::size_t first, std::size_t stride) {
        for (std::size_t si = first; si < scenarios.size(); si += stride) {
            const auto& cell = scenarios[si];
            const ScenarioSpec scenario =
                scenario_from(cell.family, cell.nmcr, cell.nsnr_db);

            std::map<LookaheadMode, PolicySolution> tables;
            for (SchemeId s : run_set) {
                if (scheme_is_learned(s)) continue;
                const LookaheadMode mode = scheme_baseline_mode(s);
                if (tables.count(mode)) continue;
                const GridSpec& grid =
                    mode == LookaheadMode::None ? plan.grid_plain : plan.grid_lookahead;
                tables.emplace(mode, solve_or_load(scenario, grid, mode, plan.cache_dir));
            }

            for (SchemeId s : run_set) {
                Rng env_rng(plan.seed, env_key(si));
                std::vector<double> episode_means;
                episode_means.reserve(plan.episodes);
                if (scheme_is_learned(s)) {
                    Rng agent_rng(plan.seed, agent_key(si, s));
                    Agent agent(scheme_policy_kind(s), scheme_agent_scheme(s),
                                scenario.capacity_c, plan.agent);
                    Environment env(scenario);
                    for (int ep = 0; ep < plan.episodes; ++ep) {
                        if (ep == 1) {
                            // exploratory rates for the first episode only
                            agent.set_rates(plan.agent.alpha1 / 10.0,
                                            plan.agent.alpha2 / 10.0,
                                            plan.agent.alpha3 / 10.0);
                            agent.set_epsilon(0.0);
                        }
                        episode_means.push_back(run_episode(
                            agent, env, plan.steps_per_episode, env_rng, agent_rng, true));
                    }
                } else {
                    const PolicySolution& table = tables.at(scheme_baseline_mode(s));
                    Environment env(scenario);
                    for (int ep = 0; ep < plan.episodes; ++ep) {
                        episode_means.push_back(
                            run_episode(table, env, plan.steps_per_episode, env_rng));
                    }
                }
                results[si].stats[s] = stats_of(episode_means);
            }
        }
    };

    const std::size_t jobs =
        std::min<std::size_t>(std::max(plan.jobs, 1), scenarios.size());
    if (jobs <= 1) {
        worker(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker, j, jobs);
        for (auto& th : pool) th.join();
    }

    EvalReport report;
    report.plan = plan;
    for (std::size_t si = 0; si < scenarios.size(); ++si) {
        const auto& cell = scenarios[si];
        for (SchemeId s : plan.schemes) {
            const CellStats& st = results[si].stats.at(s);
            const CellStats& base = results[si].stats.at(scheme_baseline(s));
            CellResult row;
            row.scheme = s;
            row.family = cell.family;
            row.nmcr = cell.nmcr;
            row.nsnr_db = cell.nsnr_db;
            row.throughput = st.mean;
            row.std_error = st.std_error;
            row.g_star = base.mean;
            row.omf = st.mean / base.mean;
            row.loss_pct = 100.0 * (1.0 - row.omf);
            report.cells.push_back(row);
        }
    }
    report.losses = performance_loss(report.cells);
    return report;
}

std::vector<SchemeLoss> performance_loss(const std::vector<CellResult>& cells) {
    std::vector<SchemeLoss> out;
    for (const auto& si : kSchemes) {
        SchemeLoss loss{si.id, 0.0, -1e300};
        int n = 0;
        for (const auto& cell : cells) {
            if (cell.scheme != si.id) continue;
            loss.average_pct += cell.loss_pct;
            loss.maximum_pct = std::max(loss.maximum_pct, cell.loss_pct);
            ++n;
        }
        if (n == 0) continue;
        loss.average_pct /= n;
        out.push_back(loss);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Emission
// ---------------------------------------------------------------------------

namespace {

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", x);
    return buf;
}

} // namespace

void write_csv(const EvalReport& report, std::ostream& out) {
    out << "scheme,family,nmcr,nsnr_db,throughput,stderr,g_star,omf,loss_pct\n";
    for (const auto& cell : report.cells) {
        out << scheme_id_name(cell.scheme) << ',' << family_name(cell.family) << ','
            << fmt(cell.nmcr) << ',' << fmt(cell.nsnr_db) << ',' << fmt(cell.throughput)
            << ',' << fmt(cell.std_error) << ',' << fmt(cell.g_star) << ','
            << fmt(cell.omf) << ',' << fmt(cell.loss_pct) << '\n';
    }
}

void write_loss_summary(const EvalReport& report, std::ostream& out) {
    out << "scheme,average_loss_pct,maximum_loss_pct\n";
    for (const auto& loss : report.losses) {
        out << scheme_id_name(loss.scheme) << ',' << fmt(loss.average_pct) << ','
            << fmt(loss.maximum_pct) << '\n';
    }
}

std::vector<std::string> write_series_files(const EvalReport& report,
                                            const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    std::vector<std::string> paths;
    for (ArrivalFamily fam : report.plan.families) {
        for (double nmcr : report.plan.nmcr_values) {
            char name[80];
            std::snprintf(name, sizeof(name), "omf_%s_nmcr%g.csv",
                          family_name(fam).c_str(), nmcr);
            const std::string path = (std::filesystem::path(out_dir) / name).string();
            std::ofstream out(path);
            if (!out) throw std::runtime_error("cannot write series file: " + path);
            out << "nsnr_db";
            for (SchemeId s : report.plan.schemes) out << ',' << scheme_id_name(s);
            out << '\n';
            for (double nsnr : report.plan.nsnr_values_db) {
                out << fmt(nsnr);
                for (SchemeId s : report.plan.schemes) {
                    for (const auto& cell : report.cells) {
                        if (cell.scheme == s && cell.family == fam &&
                            cell.nmcr == nmcr && cell.nsnr_db == nsnr) {
                            out << ',' << fmt(cell.omf);
                            break;
                        }
                    }
                }
                out << '\n';
            }
            paths.push_back(path);
        }
    }
    return paths;
}

} // namespace ehpc
