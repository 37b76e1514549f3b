#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ehpc/core.hpp"

namespace ehpc {

enum class LookaheadMode { None, Energy, Channel };

LookaheadMode lookahead_from_name(const std::string& name);
std::string lookahead_name(LookaheadMode mode);

struct GridSpec {
    int battery_levels = 250;
    int gamma_levels = 50;
    int action_levels = 250;
    int lookahead_levels = 0; // 0 when the mode carries no lookahead axis
    double gamma_truncation_quantile = 0.999;

    static GridSpec paper(LookaheadMode mode);
    static GridSpec desk(LookaheadMode mode);
};

// Sparse battery-transition row: successor battery nodes and their
// interpolation-weighted probabilities for one (battery node, action) pair.
struct TransitionRow {
    std::vector<int> nodes;
    std::vector<double> weights; // sums to 1
};

// Quantized average-reward MDP. Gamma and the lookahead axis are exogenous,
// so the transition kernel factorizes into a battery kernel times marginal
// weights; only the battery kernel is tabulated.
class DiscreteMdp {
public:
    DiscreteMdp(ScenarioSpec scenario, GridSpec grid, LookaheadMode mode);

    const ScenarioSpec& scenario() const { return scenario_; }
    const GridSpec& grid() const { return grid_; }
    LookaheadMode mode() const { return mode_; }

    const std::vector<double>& battery_nodes() const { return battery_nodes_; }
    const std::vector<double>& gamma_nodes() const { return gamma_nodes_; }
    const std::vector<double>& gamma_weights() const { return gamma_weights_; }
    const std::vector<double>& lookahead_nodes() const { return lookahead_nodes_; }
    const std::vector<double>& lookahead_weights() const { return lookahead_weights_; }

    int action_count() const { return grid_.action_levels; }
    double action_value(int battery_index, int action_index) const;

    // battery transition for taking the given action at the given node,
    // integrating over the arrival distribution (for mode Energy the
    // lookahead atom replaces the integral and this row is unused)
    const TransitionRow& transition(int battery_index, int action_index) const;

    // interpolation weights of min(b_post + arrival, c) on the battery grid
    void interpolate_battery(double value, int& lo, double& w_hi) const;

private:
    TransitionRow build_row(double b_post) const;

    ScenarioSpec scenario_;
    GridSpec grid_;
    LookaheadMode mode_;
    std::vector<double> battery_nodes_;
    std::vector<double> gamma_nodes_, gamma_weights_;
    std::vector<double> lookahead_nodes_, lookahead_weights_;
    std::vector<TransitionRow> rows_; // battery_index * action_levels + action_index
};

struct PolicySolution {
    LookaheadMode mode = LookaheadMode::None;
    double gain = 0.0; // g*, nats per slot
    // grid axes, stored for interpolation
    std::vector<double> battery_nodes;
    std::vector<double> gamma_nodes;
    std::vector<double> lookahead_nodes;
    // action per grid state, flattened as ((battery * gamma) * lookahead)
    std::vector<double> actions;
    // relative value per grid state, anchored at the first state
    std::vector<double> bias;
    int iterations = 0;

    std::size_t state_count() const { return actions.size(); }
};

// Average-reward policy iteration: alternates exact policy evaluation on the
// factorized kernel with greedy improvement over the action grid. Ties break
// toward the smaller action.
PolicySolution policy_iteration(const DiscreteMdp& mdp, double tol = 1e-9,
                                int max_iters = 200);

// multilinear interpolation of the action table, clipped to [0, B]
double evaluate_policy_table(const PolicySolution& solution, const SystemState& state);

inline double gain_of(const PolicySolution& solution) { return solution.gain; }

// ---------------------------------------------------------------------------
// Solution cache
// ---------------------------------------------------------------------------

std::uint64_t scenario_hash(const ScenarioSpec& scenario);
std::uint64_t grid_hash(const GridSpec& grid, LookaheadMode mode);

// versioned text artifact; returns the file path used
std::string cache_path(const std::string& cache_dir, const ScenarioSpec& scenario,
                       const GridSpec& grid, LookaheadMode mode);
void save_solution(const PolicySolution& solution, const std::string& path);
bool load_solution(PolicySolution& solution, const std::string& path);

// solve with cache reuse (empty cache_dir disables caching)
PolicySolution solve_or_load(const ScenarioSpec& scenario, const GridSpec& grid,
                             LookaheadMode mode, const std::string& cache_dir);

} // namespace ehpc
