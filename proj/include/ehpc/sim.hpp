#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ehpc/core.hpp"
#include "ehpc/mdp.hpp"
#include "ehpc/rl.hpp"

namespace ehpc {

// ---------------------------------------------------------------------------
// Scheme catalogue
// ---------------------------------------------------------------------------

enum class SchemeId {
    Opt,     // quantized optimal policy (policy iteration)
    Oca,     // optimistic clipped-affine agent
    Rca,     // robust clipped-affine agent
    ElkOpt,  // energy lookahead + optimal
    ElkOca,
    ElkRca,
    ClkOpt,  // channel lookahead + optimal
    ClkOca,
    ClkRca,
    EclkOca, // energy and channel lookahead (no tractable optimal counterpart)
    EclkRca,
};

std::string scheme_id_name(SchemeId s);
SchemeId scheme_id_from_name(const std::string& name);
const std::vector<SchemeId>& all_scheme_ids();

bool scheme_is_learned(SchemeId s);
// lookahead mode of the scheme's dynamic-programming counterpart
LookaheadMode scheme_baseline_mode(SchemeId s);
// OPT-variant used as the loss/OMF denominator; both-lookahead agents are
// referred to the channel-lookahead optimal, the tightest solvable baseline
SchemeId scheme_baseline(SchemeId s);
// (kind, lookahead scheme) of the learning agent; only valid for learned ids
PolicyKind scheme_policy_kind(SchemeId s);
Scheme scheme_agent_scheme(SchemeId s);

// ---------------------------------------------------------------------------
// Evaluation plan and report
// ---------------------------------------------------------------------------

struct EvalPlan {
    std::vector<ArrivalFamily> families;
    std::vector<double> nmcr_values;
    std::vector<double> nsnr_values_db;
    std::vector<SchemeId> schemes;
    int episodes = 1000;
    long steps_per_episode = 10000;
    std::uint64_t seed = 1;
    GridSpec grid_plain;     // lookahead-free solver grid
    GridSpec grid_lookahead; // grid for the lookahead solvers
    AgentConfig agent;
    std::string cache_dir;
    int jobs = 1;

    // 3 families x NMCR {0.1,0.5,0.9} x NSNR {0,5,...,30} dB, 10^3 x 10^4
    static EvalPlan paper();
    // 3 families x NMCR {0.1,0.5,0.9} x NSNR {0,10,20,30} dB, 50 x 5000
    static EvalPlan desk();

    void validate() const; // throws std::invalid_argument on a bad plan
};

struct CellResult {
    SchemeId scheme;
    ArrivalFamily family;
    double nmcr = 0.0;
    double nsnr_db = 0.0;
    double throughput = 0.0; // nats per slot
    double std_error = 0.0;  // over per-episode means
    double g_star = 0.0;     // matched baseline throughput (OMF denominator)
    double omf = 0.0;        // throughput / g_star
    double loss_pct = 0.0;   // 100 * (1 - omf), may be negative
};

struct SchemeLoss {
    SchemeId scheme;
    double average_pct = 0.0;
    double maximum_pct = 0.0;
};

struct EvalReport {
    EvalPlan plan;
    std::vector<CellResult> cells; // family-major, then nmcr, nsnr, scheme
    std::vector<SchemeLoss> losses;
};

// ---------------------------------------------------------------------------
// Episode simulation
// ---------------------------------------------------------------------------

// mean realized reward over `steps` slots driving the environment with the
// quantized policy table (no learning)
double run_episode(const PolicySolution& table, Environment& env, long steps,
                   Rng& env_rng);

// same with a learning agent; with learning off the agent only acts
double run_episode(Agent& agent, Environment& env, long steps, Rng& env_rng,
                   Rng& agent_rng, bool learning);

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

// Full grid evaluation. Learned schemes train across episodes on the
// published schedule (exploratory rates for episode 1 only); every scheme in
// a scenario consumes an identical environment stream (common random
// numbers). Baselines missing from the scheme list are simulated internally
// for normalization but not reported.
EvalReport evaluate(const EvalPlan& plan);

// per-scheme (average %, maximum %) over all cells; baselines report 0
std::vector<SchemeLoss> performance_loss(const std::vector<CellResult>& cells);

// CSV with header scheme,family,nmcr,nsnr_db,throughput,stderr,g_star,omf,loss_pct
void write_csv(const EvalReport& report, std::ostream& out);

// loss table, one row per scheme: scheme,average_loss_pct,maximum_loss_pct
void write_loss_summary(const EvalReport& report, std::ostream& out);

// one series file per (family, nmcr): columns nsnr_db then OMF per scheme;
// returns the paths written
std::vector<std::string> write_series_files(const EvalReport& report,
                                            const std::string& out_dir);

} // namespace ehpc
