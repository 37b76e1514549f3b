#include "ehpc/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ehpc/quadrature.hpp"

namespace ehpc {

LookaheadMode lookahead_from_name(const std::string& name) {
    if (name == "none") return LookaheadMode::None;
    if (name == "energy") return LookaheadMode::Energy;
    if (name == "channel") return LookaheadMode::Channel;
    throw std::invalid_argument("unknown lookahead mode: " + name);
}

std::string lookahead_name(LookaheadMode mode) {
    switch (mode) {
        case LookaheadMode::None: return "none";
        case LookaheadMode::Energy: return "energy";
        case LookaheadMode::Channel: return "channel";
    }
    throw std::logic_error("bad lookahead mode");
}

GridSpec GridSpec::paper(LookaheadMode mode) {
    if (mode == LookaheadMode::None) return GridSpec{250, 50, 250, 0, 0.999};
    return GridSpec{150, 20, 150, 20, 0.999};
}

GridSpec GridSpec::desk(LookaheadMode mode) {
    if (mode == LookaheadMode::None) return GridSpec{100, 20, 100, 0, 0.999};
    return GridSpec{60, 12, 60, 12, 0.999};
}

// ---------------------------------------------------------------------------
// DiscreteMdp
// ---------------------------------------------------------------------------

namespace {

constexpr int kQuadratureNodes = 64;

// quantile-spaced nodes of a unit-mean exponential truncated at quantile Q;
// the tail mass is lumped into the last node
void exponential_quantile_grid(double inv_rate, double quantile, int levels,
                               std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.resize(levels);
    weights.assign(levels, quantile / levels);
    for (int j = 0; j < levels; ++j) {
        const double u = (j + 0.5) / levels * quantile;
        nodes[j] = -std::log1p(-u) * inv_rate;
    }
    weights.back() += 1.0 - quantile;
}

} // namespace

DiscreteMdp::DiscreteMdp(ScenarioSpec scenario, GridSpec grid, LookaheadMode mode)
    : scenario_(std::move(scenario)), grid_(grid), mode_(mode) {
    if (grid.battery_levels < 2 || grid.action_levels < 2) {
        throw std::invalid_argument("DiscreteMdp: battery/action levels must be >= 2");
    }
    const double c = scenario_.capacity_c;

    battery_nodes_.resize(grid.battery_levels);
    for (int i = 0; i < grid.battery_levels; ++i) {
        battery_nodes_[i] = c * i / (grid.battery_levels - 1);
    }

    if (scenario_.channel_model.is_deterministic()) {
        const auto& d = std::get<DeterministicChannel>(scenario_.channel_model.variant());
        gamma_nodes_ = {d.gamma};
        gamma_weights_ = {1.0};
    } else {
        if (grid.gamma_levels < 2) {
            throw std::invalid_argument("DiscreteMdp: gamma levels must be >= 2");
        }
        exponential_quantile_grid(1.0, grid.gamma_truncation_quantile, grid.gamma_levels,
                                  gamma_nodes_, gamma_weights_);
    }

    if (mode == LookaheadMode::Channel) {
        lookahead_nodes_ = gamma_nodes_;
        lookahead_weights_ = gamma_weights_;
    } else if (mode == LookaheadMode::Energy) {
        const int nl = std::max(grid.lookahead_levels, 1);
        std::visit(
            [&](const auto& m) {
                using T = std::decay_t<decltype(m)>;
                if constexpr (std::is_same_v<T, OnePointArrival>) {
                    lookahead_nodes_ = {m.e};
                    lookahead_weights_ = {1.0};
                } else if constexpr (std::is_same_v<T, BernoulliArrival>) {
                    lookahead_nodes_ = {0.0, m.magnitude};
                    lookahead_weights_ = {1.0 - m.prob, m.prob};
                } else if constexpr (std::is_same_v<T, ExponentialArrival>) {
                    exponential_quantile_grid(1.0 / m.rate, 0.999, nl, lookahead_nodes_,
                                              lookahead_weights_);
                } else {
                    lookahead_nodes_.resize(nl);
                    lookahead_weights_.assign(nl, 1.0 / nl);
                    for (int j = 0; j < nl; ++j) {
                        lookahead_nodes_[j] = (j + 0.5) / nl * m.upper;
                    }
                }
            },
            scenario_.arrival_model.variant());
    }

    // energy-lookahead dynamics condition on the arrival atom, so the
    // arrival-integrated battery kernel is only tabulated otherwise
    if (mode != LookaheadMode::Energy) {
        rows_.reserve(static_cast<std::size_t>(grid.battery_levels) * grid.action_levels);
        for (int i = 0; i < grid.battery_levels; ++i) {
            for (int k = 0; k < grid.action_levels; ++k) {
                rows_.push_back(build_row(battery_nodes_[i] - action_value(i, k)));
            }
        }
    }
}

double DiscreteMdp::action_value(int battery_index, int action_index) const {
    return battery_nodes_[battery_index] * action_index / (grid_.action_levels - 1);
}

const TransitionRow& DiscreteMdp::transition(int battery_index, int action_index) const {
    return rows_[static_cast<std::size_t>(battery_index) * grid_.action_levels +
                 action_index];
}

void DiscreteMdp::interpolate_battery(double value, int& lo, double& w_hi) const {
    const int nb = grid_.battery_levels;
    const double step = scenario_.capacity_c / (nb - 1);
    const double pos = std::clamp(value / step, 0.0, static_cast<double>(nb - 1));
    lo = std::min(static_cast<int>(pos), nb - 2);
    w_hi = pos - lo;
}

TransitionRow DiscreteMdp::build_row(double b_post) const {
    const double c = scenario_.capacity_c;
    const double headroom = c - b_post;
    std::vector<double> dense(battery_nodes_.size(), 0.0);

    auto deposit = [&](double arrival, double mass) {
        int lo;
        double w_hi;
        interpolate_battery(std::min(b_post + arrival, c), lo, w_hi);
        dense[lo] += mass * (1.0 - w_hi);
        dense[lo + 1] += mass * w_hi;
    };

    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, OnePointArrival>) {
                deposit(m.e, 1.0);
            } else if constexpr (std::is_same_v<T, BernoulliArrival>) {
                deposit(0.0, 1.0 - m.prob);
                deposit(m.magnitude, m.prob);
            } else if constexpr (std::is_same_v<T, ExponentialArrival>) {
                const double sat = std::exp(-m.rate * headroom);
                if (headroom > 0.0) {
                    const auto rule = gauss_legendre(kQuadratureNodes, 0.0, headroom);
                    for (std::size_t n = 0; n < rule.nodes.size(); ++n) {
                        deposit(rule.nodes[n],
                                rule.weights[n] * m.rate * std::exp(-m.rate * rule.nodes[n]));
                    }
                }
                deposit(headroom, sat);
            } else {
                const double support = std::min(m.upper, headroom);
                if (support > 0.0) {
                    const auto rule = gauss_legendre(kQuadratureNodes, 0.0, support);
                    for (std::size_t n = 0; n < rule.nodes.size(); ++n) {
                        deposit(rule.nodes[n], rule.weights[n] / m.upper);
                    }
                }
                if (m.upper > headroom) {
                    deposit(headroom, (m.upper - headroom) / m.upper);
                }
            }
        },
        scenario_.arrival_model.variant());

    double total = 0.0;
    for (double w : dense) total += w;
    TransitionRow row;
    for (std::size_t i = 0; i < dense.size(); ++i) {
        if (dense[i] > 0.0) {
            row.nodes.push_back(static_cast<int>(i));
            row.weights.push_back(dense[i] / total);
        }
    }
    return row;
}

// ---------------------------------------------------------------------------
// Policy iteration
// ---------------------------------------------------------------------------

namespace {

// anchored average-reward evaluation: solve v(m) + g - sum P(m,m') v(m') = R(m)
// with v(0) = 0, unknowns x = [g, v(1..dim-1)]
struct Evaluation {
    double gain;
    std::vector<double> v;
};

Evaluation solve_anchored(const std::vector<double>& pbar, const std::vector<double>& rbar) {
    const std::size_t dim = rbar.size();
    std::vector<double> a(dim * dim, 0.0);
    std::vector<double> x(rbar);
    for (std::size_t m = 0; m < dim; ++m) {
        a[m * dim + 0] = 1.0; // gain column
        if (m > 0) a[m * dim + m] += 1.0;
        for (std::size_t n = 1; n < dim; ++n) {
            a[m * dim + n] -= pbar[m * dim + n];
        }
    }
    // LU with partial pivoting, in place
    std::vector<std::size_t> perm(dim);
    for (std::size_t i = 0; i < dim; ++i) perm[i] = i;
    for (std::size_t col = 0; col < dim; ++col) {
        std::size_t pivot = col;
        double best = std::abs(a[perm[col] * dim + col]);
        for (std::size_t r = col + 1; r < dim; ++r) {
            const double cand = std::abs(a[perm[r] * dim + col]);
            if (cand > best) {
                best = cand;
                pivot = r;
            }
        }
        if (best == 0.0) throw std::runtime_error("policy evaluation: singular system");
        std::swap(perm[col], perm[pivot]);
        const double* prow = &a[perm[col] * dim];
        for (std::size_t r = col + 1; r < dim; ++r) {
            double* row = &a[perm[r] * dim];
            const double factor = row[col] / prow[col];
            if (factor == 0.0) continue;
            row[col] = 0.0;
            for (std::size_t cc = col + 1; cc < dim; ++cc) row[cc] -= factor * prow[cc];
            x[perm[r]] -= factor * x[perm[col]];
        }
    }
    std::vector<double> sol(dim);
    for (std::size_t ri = dim; ri-- > 0;) {
        const double* row = &a[perm[ri] * dim];
        double acc = x[perm[ri]];
        for (std::size_t cc = ri + 1; cc < dim; ++cc) acc -= row[cc] * sol[cc];
        sol[ri] = acc / row[ri];
    }
    Evaluation out;
    out.gain = sol[0];
    out.v.assign(dim, 0.0);
    for (std::size_t m = 1; m < dim; ++m) out.v[m] = sol[m];
    return out;
}

// relative value iteration fallback for large reduced systems
Evaluation iterate_anchored(const std::vector<double>& pbar, const std::vector<double>& rbar,
                            double tol, int max_sweeps) {
    const std::size_t dim = rbar.size();
    std::vector<double> v(dim, 0.0), w(dim);
    double gain = 0.0;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        for (std::size_t m = 0; m < dim; ++m) {
            double acc = rbar[m];
            const double* row = &pbar[m * dim];
            for (std::size_t n = 0; n < dim; ++n) acc += row[n] * v[n];
            w[m] = acc;
        }
        gain = w[0] - v[0];
        double lo = w[0] - v[0], hi = lo;
        for (std::size_t m = 0; m < dim; ++m) {
            const double d = w[m] - v[m];
            lo = std::min(lo, d);
            hi = std::max(hi, d);
        }
        const double anchor = w[0];
        for (std::size_t m = 0; m < dim; ++m) v[m] = w[m] - anchor;
        if (hi - lo < tol) return Evaluation{gain, std::move(v)};
    }
    throw std::runtime_error("policy evaluation: relative value iteration did not converge");
}

constexpr std::size_t kDirectSolveLimit = 1500;

Evaluation evaluate(const std::vector<double>& pbar, const std::vector<double>& rbar,
                    double tol) {
    if (rbar.size() <= kDirectSolveLimit) return solve_anchored(pbar, rbar);
    return iterate_anchored(pbar, rbar, tol, 2'000'000);
}

struct Shape {
    int nb, ng, nl, na;
    std::size_t states() const {
        return static_cast<std::size_t>(nb) * ng * nl;
    }
    std::size_t index(int i, int j, int l) const {
        return (static_cast<std::size_t>(i) * ng + j) * nl + l;
    }
};

} // namespace

PolicySolution policy_iteration(const DiscreteMdp& mdp, double tol, int max_iters) {
    const Shape sh{static_cast<int>(mdp.battery_nodes().size()),
                   static_cast<int>(mdp.gamma_nodes().size()),
                   mdp.mode() == LookaheadMode::None
                       ? 1
                       : static_cast<int>(mdp.lookahead_nodes().size()),
                   mdp.action_count()};
    const auto mode = mdp.mode();
    const auto& gw = mdp.gamma_weights();
    const auto& gn = mdp.gamma_nodes();
    const auto& ln = mdp.lookahead_nodes();
    const auto& lw = mdp.lookahead_weights();
    const double c = mdp.scenario().capacity_c;

    // reduced value dimension: battery only, except channel lookahead where
    // the successor gamma is pinned by the current lookahead coordinate
    const std::size_t vdim =
        mode == LookaheadMode::Channel ? static_cast<std::size_t>(sh.nb) * sh.ng
                                       : static_cast<std::size_t>(sh.nb);

    std::vector<int> policy(sh.states(), sh.na - 1); // start from the greedy policy
    std::vector<double> v(vdim, 0.0);
    double gain = 0.0;

    auto vinterp = [&](double b_next) {
        int lo;
        double w_hi;
        mdp.interpolate_battery(b_next, lo, w_hi);
        return (1.0 - w_hi) * v[lo] + w_hi * v[lo + 1];
    };

    auto evaluate_policy = [&]() {
        std::vector<double> pbar(vdim * vdim, 0.0);
        std::vector<double> rbar(vdim, 0.0);
        if (mode == LookaheadMode::Channel) {
            for (int i = 0; i < sh.nb; ++i) {
                for (int j = 0; j < sh.ng; ++j) {
                    const std::size_t m = static_cast<std::size_t>(i) * sh.ng + j;
                    for (int l = 0; l < sh.nl; ++l) {
                        const int k = policy[sh.index(i, j, l)];
                        rbar[m] += lw[l] * rate(gn[j] * mdp.action_value(i, k));
                        const auto& row = mdp.transition(i, k);
                        for (std::size_t n = 0; n < row.nodes.size(); ++n) {
                            const std::size_t mp =
                                static_cast<std::size_t>(row.nodes[n]) * sh.ng + l;
                            pbar[m * vdim + mp] += lw[l] * row.weights[n];
                        }
                    }
                }
            }
        } else if (mode == LookaheadMode::Energy) {
            for (int i = 0; i < sh.nb; ++i) {
                const auto m = static_cast<std::size_t>(i);
                for (int j = 0; j < sh.ng; ++j) {
                    for (int l = 0; l < sh.nl; ++l) {
                        const double wjl = gw[j] * lw[l];
                        const int k = policy[sh.index(i, j, l)];
                        const double u = mdp.action_value(i, k);
                        rbar[m] += wjl * rate(gn[j] * u);
                        int lo;
                        double w_hi;
                        mdp.interpolate_battery(
                            std::min(mdp.battery_nodes()[i] - u + ln[l], c), lo, w_hi);
                        pbar[m * vdim + lo] += wjl * (1.0 - w_hi);
                        pbar[m * vdim + lo + 1] += wjl * w_hi;
                    }
                }
            }
        } else {
            for (int i = 0; i < sh.nb; ++i) {
                const auto m = static_cast<std::size_t>(i);
                for (int j = 0; j < sh.ng; ++j) {
                    const int k = policy[sh.index(i, j, 0)];
                    rbar[m] += gw[j] * rate(gn[j] * mdp.action_value(i, k));
                    const auto& row = mdp.transition(i, k);
                    for (std::size_t n = 0; n < row.nodes.size(); ++n) {
                        pbar[m * vdim + row.nodes[n]] += gw[j] * row.weights[n];
                    }
                }
            }
        }
        auto ev = evaluate(pbar, rbar, 1e-10);
        gain = ev.gain;
        v = std::move(ev.v);
    };

    auto improve = [&]() -> bool {
        bool changed = false;
        if (mode == LookaheadMode::Channel) {
            // S(i,k,l) = sum_i' T(i,k)(i') v(i',l)
            std::vector<double> s(static_cast<std::size_t>(sh.nb) * sh.na * sh.nl);
            for (int i = 0; i < sh.nb; ++i) {
                for (int k = 0; k < sh.na; ++k) {
                    const auto& row = mdp.transition(i, k);
                    double* out = &s[(static_cast<std::size_t>(i) * sh.na + k) * sh.nl];
                    for (int l = 0; l < sh.nl; ++l) out[l] = 0.0;
                    for (std::size_t n = 0; n < row.nodes.size(); ++n) {
                        const double* vr = &v[static_cast<std::size_t>(row.nodes[n]) * sh.ng];
                        for (int l = 0; l < sh.nl; ++l) out[l] += row.weights[n] * vr[l];
                    }
                }
            }
            for (int i = 0; i < sh.nb; ++i) {
                for (int j = 0; j < sh.ng; ++j) {
                    for (int l = 0; l < sh.nl; ++l) {
                        int best_k = 0;
                        double best = -1e300;
                        for (int k = 0; k < sh.na; ++k) {
                            const double val =
                                rate(gn[j] * mdp.action_value(i, k)) +
                                s[(static_cast<std::size_t>(i) * sh.na + k) * sh.nl + l];
                            if (val > best) {
                                best = val;
                                best_k = k;
                            }
                        }
                        auto& slot = policy[sh.index(i, j, l)];
                        if (slot != best_k) {
                            slot = best_k;
                            changed = true;
                        }
                    }
                }
            }
        } else if (mode == LookaheadMode::Energy) {
            for (int i = 0; i < sh.nb; ++i) {
                for (int l = 0; l < sh.nl; ++l) {
                    for (int j = 0; j < sh.ng; ++j) {
                        int best_k = 0;
                        double best = -1e300;
                        for (int k = 0; k < sh.na; ++k) {
                            const double u = mdp.action_value(i, k);
                            const double val =
                                rate(gn[j] * u) +
                                vinterp(std::min(mdp.battery_nodes()[i] - u + ln[l], c));
                            if (val > best) {
                                best = val;
                                best_k = k;
                            }
                        }
                        auto& slot = policy[sh.index(i, j, l)];
                        if (slot != best_k) {
                            slot = best_k;
                            changed = true;
                        }
                    }
                }
            }
        } else {
            std::vector<double> s(static_cast<std::size_t>(sh.nb) * sh.na);
            for (int i = 0; i < sh.nb; ++i) {
                for (int k = 0; k < sh.na; ++k) {
                    const auto& row = mdp.transition(i, k);
                    double acc = 0.0;
                    for (std::size_t n = 0; n < row.nodes.size(); ++n) {
                        acc += row.weights[n] * v[row.nodes[n]];
                    }
                    s[static_cast<std::size_t>(i) * sh.na + k] = acc;
                }
            }
            for (int i = 0; i < sh.nb; ++i) {
                for (int j = 0; j < sh.ng; ++j) {
                    int best_k = 0;
                    double best = -1e300;
                    for (int k = 0; k < sh.na; ++k) {
                        const double val = rate(gn[j] * mdp.action_value(i, k)) +
                                           s[static_cast<std::size_t>(i) * sh.na + k];
                        if (val > best) {
                            best = val;
                            best_k = k;
                        }
                    }
                    auto& slot = policy[sh.index(i, j, 0)];
                    if (slot != best_k) {
                        slot = best_k;
                        changed = true;
                    }
                }
            }
        }
        return changed;
    };

    int iterations = 0;
    double prev_gain = -1e300;
    for (; iterations < max_iters; ++iterations) {
        evaluate_policy();
        const bool changed = improve();
        if (!changed) break;
        if (gain - prev_gain < tol && iterations > 0) break;
        prev_gain = gain;
    }
    if (iterations >= max_iters) {
        throw std::runtime_error("policy_iteration: no convergence after " +
                                 std::to_string(max_iters) +
                                 " iterations (last gain " + std::to_string(gain) + ")");
    }

    PolicySolution sol;
    sol.mode = mode;
    sol.gain = gain;
    sol.iterations = iterations + 1;
    sol.battery_nodes = mdp.battery_nodes();
    sol.gamma_nodes = mdp.gamma_nodes();
    sol.lookahead_nodes = mdp.lookahead_nodes();
    sol.actions.resize(sh.states());
    sol.bias.resize(sh.states());
    for (int i = 0; i < sh.nb; ++i) {
        for (int j = 0; j < sh.ng; ++j) {
            for (int l = 0; l < sh.nl; ++l) {
                const auto sdx = sh.index(i, j, l);
                const int k = policy[sdx];
                const double u = mdp.action_value(i, k);
                sol.actions[sdx] = u;
                double future = 0.0;
                if (mode == LookaheadMode::Channel) {
                    const auto& row = mdp.transition(i, k);
                    for (std::size_t n = 0; n < row.nodes.size(); ++n) {
                        future += row.weights[n] *
                                  v[static_cast<std::size_t>(row.nodes[n]) * sh.ng + l];
                    }
                } else if (mode == LookaheadMode::Energy) {
                    future = vinterp(std::min(mdp.battery_nodes()[i] - u + ln[l], c));
                } else {
                    const auto& row = mdp.transition(i, k);
                    for (std::size_t n = 0; n < row.nodes.size(); ++n) {
                        future += row.weights[n] * v[row.nodes[n]];
                    }
                }
                sol.bias[sdx] = rate(gn[j] * u) + future - gain;
            }
        }
    }
    const double anchor = sol.bias[0];
    for (double& h : sol.bias) h -= anchor;
    return sol;
}

// ---------------------------------------------------------------------------
// Policy table interpolation
// ---------------------------------------------------------------------------

namespace {

// clamped linear-interpolation coordinates on a sorted axis
void axis_coords(const std::vector<double>& nodes, double x, int& lo, double& w_hi) {
    if (nodes.size() <= 1 || x <= nodes.front()) {
        lo = 0;
        w_hi = 0.0;
        return;
    }
    if (x >= nodes.back()) {
        lo = static_cast<int>(nodes.size()) - 2;
        w_hi = 1.0;
        return;
    }
    const auto it = std::upper_bound(nodes.begin(), nodes.end(), x);
    lo = static_cast<int>(it - nodes.begin()) - 1;
    w_hi = (x - nodes[lo]) / (nodes[lo + 1] - nodes[lo]);
}

} // namespace

double evaluate_policy_table(const PolicySolution& solution, const SystemState& state) {
    const int nb = static_cast<int>(solution.battery_nodes.size());
    const int ng = static_cast<int>(solution.gamma_nodes.size());
    const int nl = solution.mode == LookaheadMode::None
                       ? 1
                       : static_cast<int>(solution.lookahead_nodes.size());

    int bi, gi, li = 0;
    double bw, gw, lw = 0.0;
    axis_coords(solution.battery_nodes, state.battery, bi, bw);
    axis_coords(solution.gamma_nodes, state.gamma, gi, gw);
    if (solution.mode == LookaheadMode::Energy) {
        if (!state.lookahead_energy) {
            throw std::logic_error("evaluate_policy_table: energy lookahead missing");
        }
        axis_coords(solution.lookahead_nodes, *state.lookahead_energy, li, lw);
    } else if (solution.mode == LookaheadMode::Channel) {
        if (!state.lookahead_gamma) {
            throw std::logic_error("evaluate_policy_table: channel lookahead missing");
        }
        axis_coords(solution.lookahead_nodes, *state.lookahead_gamma, li, lw);
    }

    auto at = [&](int i, int j, int l) {
        i = std::min(i, nb - 1);
        j = std::min(j, ng - 1);
        l = std::min(l, nl - 1);
        return solution.actions[(static_cast<std::size_t>(i) * ng + j) * nl + l];
    };

    double action = 0.0;
    for (int di = 0; di < 2; ++di) {
        const double wi = di ? bw : 1.0 - bw;
        if (wi == 0.0) continue;
        for (int dj = 0; dj < 2; ++dj) {
            const double wj = dj ? gw : 1.0 - gw;
            if (wj == 0.0) continue;
            for (int dl = 0; dl < 2; ++dl) {
                const double wl = dl ? lw : 1.0 - lw;
                if (wl == 0.0) continue;
                action += wi * wj * wl * at(bi + di, gi + dj, li + dl);
            }
        }
    }
    return clip(action, 0.0, state.battery);
}

// ---------------------------------------------------------------------------
// Cache
// ---------------------------------------------------------------------------

namespace {

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string describe(const ScenarioSpec& sc) {
    char buf[256];
    const char* fam = std::visit(
        [](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, OnePointArrival>) return "onepoint";
            else if constexpr (std::is_same_v<T, BernoulliArrival>) return "bernoulli";
            else if constexpr (std::is_same_v<T, ExponentialArrival>) return "exponential";
            else return "uniform";
        },
        sc.arrival_model.variant());
    const double chan = sc.channel_model.is_deterministic()
                            ? std::get<DeterministicChannel>(sc.channel_model.variant()).gamma
                            : -1.0;
    std::snprintf(buf, sizeof(buf), "%s|%.17g|%.17g|%.17g|%.17g|%.17g", fam, sc.capacity_c,
                  sc.arrival_model.mean(), sc.nmcr, sc.nsnr_db, chan);
    return buf;
}

} // namespace

std::uint64_t scenario_hash(const ScenarioSpec& scenario) { return fnv1a(describe(scenario)); }

std::uint64_t grid_hash(const GridSpec& grid, LookaheadMode mode) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%d|%d|%d|%d|%.17g|%s", grid.battery_levels,
                  grid.gamma_levels, grid.action_levels, grid.lookahead_levels,
                  grid.gamma_truncation_quantile, lookahead_name(mode).c_str());
    return fnv1a(buf);
}

std::string cache_path(const std::string& cache_dir, const ScenarioSpec& scenario,
                       const GridSpec& grid, LookaheadMode mode) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "mdp_%016llx_%016llx.txt",
                  static_cast<unsigned long long>(scenario_hash(scenario)),
                  static_cast<unsigned long long>(grid_hash(grid, mode)));
    return (std::filesystem::path(cache_dir) / buf).string();
}

namespace {
constexpr const char* kCacheVersion = "ehpc-mdp-cache-v1";

void write_vec(std::ostream& out, const char* name, const std::vector<double>& v) {
    out << name << " " << v.size();
    out << std::hexfloat;
    for (double x : v) out << " " << x;
    out << std::defaultfloat << "\n";
}

bool read_vec(std::istream& in, const std::string& expect, std::vector<double>& v) {
    std::string name;
    std::size_t n;
    if (!(in >> name >> n) || name != expect) return false;
    v.resize(n);
    std::string tok;
    for (auto& x : v) {
        if (!(in >> tok)) return false;
        x = std::strtod(tok.c_str(), nullptr);
    }
    return true;
}
} // namespace

void save_solution(const PolicySolution& solution, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write cache file: " + path);
    out << kCacheVersion << "\n";
    out << "tolerances pi=1e-09 rvi=1e-10\n";
    out << "mode " << lookahead_name(solution.mode) << "\n";
    out << "gain " << std::hexfloat << solution.gain << std::defaultfloat << "\n";
    out << "iterations " << solution.iterations << "\n";
    write_vec(out, "battery_nodes", solution.battery_nodes);
    write_vec(out, "gamma_nodes", solution.gamma_nodes);
    write_vec(out, "lookahead_nodes", solution.lookahead_nodes);
    write_vec(out, "actions", solution.actions);
    write_vec(out, "bias", solution.bias);
}

bool load_solution(PolicySolution& solution, const std::string& path) {
    std::ifstream in(path);
    if (!in) return false;
    std::string version;
    if (!(in >> version) || version != kCacheVersion) return false;
    std::string key, value;
    if (!(in >> key >> value) || key != "tolerances") return false;
    if (!(in >> value) || value.rfind("rvi=", 0) != 0) return false;
    if (!(in >> key >> value) || key != "mode") return false;
    solution.mode = lookahead_from_name(value);
    if (!(in >> key >> value) || key != "gain") return false;
    solution.gain = std::strtod(value.c_str(), nullptr);
    if (!(in >> key >> solution.iterations) || key != "iterations") return false;
    return read_vec(in, "battery_nodes", solution.battery_nodes) &&
           read_vec(in, "gamma_nodes", solution.gamma_nodes) &&
           read_vec(in, "lookahead_nodes", solution.lookahead_nodes) &&
           read_vec(in, "actions", solution.actions) &&
           read_vec(in, "bias", solution.bias);
}

PolicySolution solve_or_load(const ScenarioSpec& scenario, const GridSpec& grid,
                             LookaheadMode mode, const std::string& cache_dir) {
    PolicySolution solution;
    std::string path;
    if (!cache_dir.empty()) {
        std::filesystem::create_directories(cache_dir);
        path = cache_path(cache_dir, scenario, grid, mode);
        if (load_solution(solution, path)) return solution;
    }
    DiscreteMdp mdp(scenario, grid, mode);
    solution = policy_iteration(mdp);
    if (!path.empty()) save_solution(solution, path);
    return solution;
}

} // namespace ehpc
