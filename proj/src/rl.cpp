#include "ehpc/rl.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

namespace ehpc {

bool scheme_needs_energy_lookahead(Scheme s) {
    return s == Scheme::EnergyLookahead || s == Scheme::EnergyChannelLookahead;
}

bool scheme_needs_channel_lookahead(Scheme s) {
    return s == Scheme::ChannelLookahead || s == Scheme::EnergyChannelLookahead;
}

bool scheme_uses_extended_value(Scheme s) { return scheme_needs_channel_lookahead(s); }

bool scheme_estimates_arrival(Scheme s) { return !scheme_needs_energy_lookahead(s); }

// ---------------------------------------------------------------------------
// ReplayMemory
// ---------------------------------------------------------------------------

ReplayMemory::ReplayMemory(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("ReplayMemory: zero capacity");
    buffer_.reserve(capacity);
}

void ReplayMemory::push(const Transition& t) {
    if (buffer_.size() < capacity_) {
        buffer_.push_back(t);
    } else {
        buffer_[head_] = t; // overwrite the oldest entry
        head_ = (head_ + 1) % capacity_;
    }
}

const Transition& ReplayMemory::operator[](std::size_t i) const { return buffer_.at(i); }

std::vector<Transition> ReplayMemory::sample(std::size_t n, Rng& rng) const {
    if (buffer_.empty()) throw std::logic_error("ReplayMemory::sample: empty memory");
    std::vector<Transition> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(buffer_[static_cast<std::size_t>(rng.next_u64() % buffer_.size())]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Reparameterization
// ---------------------------------------------------------------------------

double logistic(double theta) {
    // clamp away from the saturation values so q stays strictly inside (0,1)
    return std::clamp(1.0 / (1.0 + std::exp(-theta)),
                      std::numeric_limits<double>::min(),
                      1.0 - std::numeric_limits<double>::epsilon());
}

double logistic_inverse(double y) {
    if (y <= 0.0 || y >= 1.0) throw std::domain_error("logistic_inverse: y outside (0,1)");
    return std::log(y / (1.0 - y));
}

double softplus(double theta) {
    if (theta > 30.0) return theta;
    return std::log1p(std::exp(theta));
}

double softplus_inverse(double y) {
    if (y <= 0.0) throw std::domain_error("softplus_inverse: y <= 0");
    if (y > 30.0) return y;
    return std::log(std::expm1(y));
}

ReparamVars ReparamVars::basic(double q, double gamma_hat) {
    return ReparamVars{{logistic_inverse(q), softplus_inverse(gamma_hat)}};
}

ReparamVars ReparamVars::extended(double q, double gamma0, double slope) {
    return ReparamVars{
        {logistic_inverse(q), softplus_inverse(gamma0), softplus_inverse(slope)}};
}

double ReparamVars::value_b(double b) const {
    return rel_value(b, RelValueParams{q(), gamma_hat()});
}

double ReparamVars::value_bg(double b, double gamma) const {
    return rel_value_ext(b, gamma, RelValueExtParams{q(), gamma_hat(), slope()});
}

double ReparamVars::value(const Transition& t, bool next) const {
    if (is_extended()) {
        return value_bg(next ? t.b_next : t.b, next ? *t.gamma_next : *t.gamma);
    }
    return value_b(next ? t.b_next : t.b);
}

namespace {

// d/dq of log1p(gqb)/q with t = g*q*b, equal to (t/(1+t) - log1p(t))/q^2;
// the numerator cancels to O(t^2), so a series takes over for small t
double rel_value_dq(double q, double t) {
    if (t < 1e-4) {
        const double gb2 = (t / q) * (t / q); // (gamma*b)^2
        return gb2 * (-0.5 + t * (2.0 / 3.0) - t * t * 0.75);
    }
    return (t / (1.0 + t) - std::log1p(t)) / (q * q);
}

} // namespace

std::vector<double> minibatch_grad(const ReparamVars& vars, double g_hat,
                                   const std::vector<Transition>& batch) {
    const std::size_t dim = vars.theta.size();
    std::vector<double> grad(dim, 0.0);
    if (batch.empty()) return grad;

    const double q = vars.q();
    const double dq_dtheta = q * (1.0 - q);
    const double dg_dtheta = logistic(vars.theta[1]); // softplus derivative

    for (const Transition& t : batch) {
        const double target = t.r - g_hat + vars.value(t, /*next=*/true);
        const double fitted = vars.value(t, /*next=*/false);
        const double residual = target - fitted;

        if (vars.is_extended()) {
            const double gamma = *t.gamma;
            const double eff = vars.slope() * gamma + vars.gamma_hat();
            const double x = eff * q * t.b;
            const double dh_dq = rel_value_dq(q, x);
            const double dh_deff = t.b / (1.0 + x);
            const double ds_dtheta = logistic(vars.theta[2]);
            grad[0] -= residual * dh_dq * dq_dtheta;
            grad[1] -= residual * dh_deff * dg_dtheta;
            grad[2] -= residual * dh_deff * gamma * ds_dtheta;
        } else {
            const double x = vars.gamma_hat() * q * t.b;
            grad[0] -= residual * rel_value_dq(q, x) * dq_dtheta;
            grad[1] -= residual * (t.b / (1.0 + x)) * dg_dtheta;
        }
    }
    for (double& g : grad) g /= static_cast<double>(batch.size());
    return grad;
}

void adam_step(AdamState& state, std::vector<double>& theta,
               const std::vector<double>& grad, double learning_rate,
               const AgentConfig& config) {
    if (state.m.size() != theta.size()) {
        state.m.assign(theta.size(), 0.0);
        state.v.assign(theta.size(), 0.0);
        state.step = 0;
    }
    ++state.step;
    const double b1 = config.adam_beta1;
    const double b2 = config.adam_beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < theta.size(); ++i) {
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * grad[i];
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * grad[i] * grad[i];
        const double m_hat = state.m[i] / bc1;
        const double v_hat = state.v[i] / bc2;
        theta[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + config.adam_eps);
    }
}

// ---------------------------------------------------------------------------
// Agent
// ---------------------------------------------------------------------------

namespace {
// softplus(theta) == 0 is unreachable, so the slope starts at a negligible
// positive value instead of the nominal zero
constexpr double kInitialSlope = 1e-6;
} // namespace

Agent::Agent(PolicyKind kind, Scheme scheme, double capacity_c, AgentConfig config)
    : kind_(kind),
      scheme_(scheme),
      capacity_c_(capacity_c),
      config_(config),
      reparam_(scheme_uses_extended_value(scheme)
                   ? ReparamVars::extended(0.5, 1.0, kInitialSlope)
                   : ReparamVars::basic(0.5, 1.0)),
      memory_(config.memory_capacity) {
    if (capacity_c <= 0.0) throw std::invalid_argument("Agent: capacity <= 0");
}

double Agent::effective_gamma_hat(const SystemState& state) const {
    if (scheme_needs_channel_lookahead(scheme_)) {
        if (!state.lookahead_gamma) {
            throw std::logic_error("Agent: channel lookahead missing from state");
        }
        return reparam_.slope() * *state.lookahead_gamma + reparam_.gamma_hat();
    }
    return reparam_.gamma_hat();
}

OptimisticParams Agent::optimistic_params(const SystemState& state) const {
    double e = e_;
    if (scheme_needs_energy_lookahead(scheme_)) {
        if (!state.lookahead_energy) {
            throw std::logic_error("Agent: energy lookahead missing from state");
        }
        e = std::min(*state.lookahead_energy, capacity_c_);
    }
    return OptimisticParams{e, reparam_.q(), effective_gamma_hat(state)};
}

RobustParams Agent::robust_params(const SystemState& state) const {
    double p = p_;
    if (scheme_needs_energy_lookahead(scheme_)) {
        if (!state.lookahead_energy) {
            throw std::logic_error("Agent: energy lookahead missing from state");
        }
        p = std::min(*state.lookahead_energy, capacity_c_) / capacity_c_;
    }
    return RobustParams{p, reparam_.q(), effective_gamma_hat(state)};
}

double Agent::policy_action(const SystemState& state) const {
    if (kind_ == PolicyKind::Optimistic) {
        return optimistic_policy(state.battery, state.gamma, capacity_c_,
                                 optimistic_params(state));
    }
    return robust_policy(state.battery, state.gamma, robust_params(state));
}

double Agent::act(const SystemState& state, Rng& rng) {
    if (config_.epsilon > 0.0 && rng.bernoulli(config_.epsilon)) {
        return rng.uniform(state.battery);
    }
    return policy_action(state);
}

double Agent::td_step(const Transition& t) {
    const double delta =
        t.r - g_hat_ + reparam_.value(t, /*next=*/true) - reparam_.value(t, /*next=*/false);
    g_hat_ += config_.alpha2 * delta;
    return g_hat_;
}

void Agent::update_aux(double b, double b_next, double action) {
    const double arrived = b_next - b + action;           // E = B' - B + U
    const double headroom = capacity_c_ - b + action;     // C = c - B + U
    if (kind_ == PolicyKind::Optimistic) {
        if (headroom >= c_hat_) {
            e_ = clip(e_ + config_.alpha3 * (arrived - e_), 0.0, capacity_c_);
        }
        c_hat_ += config_.alpha3 * (headroom - c_hat_);
    } else {
        // DMCR limit at zero headroom: E/C -> 1{E > 0}
        const double innovation =
            headroom > 0.0 ? arrived / headroom : (arrived > 0.0 ? 1.0 : 0.0);
        p_ = clip(p_ + config_.alpha3 * (innovation - p_), 0.0, 1.0);
    }
}

void Agent::minibatch_update(Rng& rng) {
    if (memory_.size() == 0) return;
    const auto batch = memory_.sample(config_.minibatch, rng);
    const auto grad = minibatch_grad(reparam_, g_hat_, batch);
    adam_step(adam_, reparam_.theta, grad, config_.alpha1, config_);
}

double Agent::agent_step(Environment& env, Rng& env_rng, Rng& agent_rng) {
    const SystemState before = env.state();
    const double u = act(before, agent_rng);
    const double reward = env.step(u, env_rng);
    const SystemState& after = env.state();

    Transition t{before.battery, reward, after.battery, std::nullopt, std::nullopt};
    if (scheme_uses_extended_value(scheme_)) {
        t.gamma = before.gamma;
        t.gamma_next = after.gamma;
    }
    memory_.push(t);
    td_step(t);
    if (scheme_estimates_arrival(scheme_)) {
        update_aux(before.battery, after.battery, u);
    }
    minibatch_update(agent_rng);
    ++step_count_;
    return reward;
}

void Agent::set_rates(double alpha1, double alpha2, double alpha3) {
    config_.alpha1 = alpha1;
    config_.alpha2 = alpha2;
    config_.alpha3 = alpha3;
}

void Agent::set_epsilon(double epsilon) { config_.epsilon = epsilon; }

// ---------------------------------------------------------------------------
// Snapshot (key-value text; hexfloat for exact round trips; replay memory
// contents are transient and not part of the snapshot)
// ---------------------------------------------------------------------------

void Agent::save(std::ostream& out) const {
    out << std::hexfloat;
    out << "kind " << (kind_ == PolicyKind::Optimistic ? "optimistic" : "robust") << "\n";
    out << "scheme " << static_cast<int>(scheme_) << "\n";
    out << "capacity " << capacity_c_ << "\n";
    out << "alpha1 " << config_.alpha1 << "\n";
    out << "alpha2 " << config_.alpha2 << "\n";
    out << "alpha3 " << config_.alpha3 << "\n";
    out << "memory_capacity " << std::dec << config_.memory_capacity << std::hexfloat << "\n";
    out << "minibatch " << std::dec << config_.minibatch << std::hexfloat << "\n";
    out << "epsilon " << config_.epsilon << "\n";
    out << "theta_dim " << std::dec << reparam_.theta.size() << std::hexfloat << "\n";
    for (std::size_t i = 0; i < reparam_.theta.size(); ++i) {
        out << "theta" << std::dec << i << std::hexfloat << " " << reparam_.theta[i] << "\n";
    }
    for (std::size_t i = 0; i < adam_.m.size(); ++i) {
        out << "adam_m" << std::dec << i << std::hexfloat << " " << adam_.m[i] << "\n";
        out << "adam_v" << std::dec << i << std::hexfloat << " " << adam_.v[i] << "\n";
    }
    out << "adam_step " << std::dec << adam_.step << std::hexfloat << "\n";
    out << "g_hat " << g_hat_ << "\n";
    out << "e " << e_ << "\n";
    out << "c_hat " << c_hat_ << "\n";
    out << "p " << p_ << "\n";
    out << "step_count " << std::dec << step_count_ << "\n";
}

Agent Agent::load(std::istream& in) {
    std::map<std::string, std::string> kv;
    std::string key, value;
    while (in >> key >> value) kv[key] = value;
    auto num = [&kv](const std::string& k) {
        auto it = kv.find(k);
        if (it == kv.end()) throw std::runtime_error("Agent::load: missing key " + k);
        return std::strtod(it->second.c_str(), nullptr);
    };
    auto num_or = [&kv](const std::string& k, double fallback) {
        auto it = kv.find(k);
        return it == kv.end() ? fallback : std::strtod(it->second.c_str(), nullptr);
    };

    AgentConfig cfg;
    cfg.alpha1 = num("alpha1");
    cfg.alpha2 = num("alpha2");
    cfg.alpha3 = num("alpha3");
    cfg.memory_capacity = static_cast<std::size_t>(num("memory_capacity"));
    cfg.minibatch = static_cast<std::size_t>(num("minibatch"));
    cfg.epsilon = num("epsilon");

    const PolicyKind kind =
        kv.at("kind") == "optimistic" ? PolicyKind::Optimistic : PolicyKind::Robust;
    const Scheme scheme = static_cast<Scheme>(static_cast<int>(num("scheme")));
    Agent agent(kind, scheme, num("capacity"), cfg);

    const auto dim = static_cast<std::size_t>(num("theta_dim"));
    agent.reparam_.theta.resize(dim);
    agent.adam_.m.assign(dim, 0.0);
    agent.adam_.v.assign(dim, 0.0);
    for (std::size_t i = 0; i < dim; ++i) {
        agent.reparam_.theta[i] = num("theta" + std::to_string(i));
        agent.adam_.m[i] = num_or("adam_m" + std::to_string(i), 0.0);
        agent.adam_.v[i] = num_or("adam_v" + std::to_string(i), 0.0);
    }
    agent.adam_.step = static_cast<long>(num("adam_step"));
    agent.g_hat_ = num("g_hat");
    agent.e_ = num("e");
    agent.c_hat_ = num("c_hat");
    agent.p_ = num("p");
    agent.step_count_ = static_cast<long>(num("step_count"));
    return agent;
}

} // namespace ehpc
