#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <vector>

#include "ehpc/core.hpp"
#include "ehpc/policies.hpp"

namespace ehpc {

enum class PolicyKind { Optimistic, Robust };

enum class Scheme { Online, EnergyLookahead, ChannelLookahead, EnergyChannelLookahead };

bool scheme_needs_energy_lookahead(Scheme s);
bool scheme_needs_channel_lookahead(Scheme s);
// channel-lookahead schemes carry gamma in their transitions and fit the
// extended relative value
bool scheme_uses_extended_value(Scheme s);
// only the schemes without energy lookahead run the e/p estimators
bool scheme_estimates_arrival(Scheme s);

struct AgentConfig {
    double alpha1 = 1e-3; // minibatch regression rate
    double alpha2 = 1e-3; // throughput-estimate rate
    double alpha3 = 1e-3; // auxiliary-estimator rate
    std::size_t memory_capacity = 128;
    std::size_t minibatch = 64;
    double epsilon = 0.02;
    double adam_beta1 = 0.0;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
};

struct Transition {
    double b;
    double r;
    double b_next;
    // present only for transitions recorded by channel-lookahead schemes
    std::optional<double> gamma;
    std::optional<double> gamma_next;
};

// bounded FIFO queue with uniform sampling with replacement
class ReplayMemory {
public:
    explicit ReplayMemory(std::size_t capacity);

    void push(const Transition& t);
    std::size_t size() const { return buffer_.size(); }
    std::size_t capacity() const { return capacity_; }
    const Transition& operator[](std::size_t i) const;

    std::vector<Transition> sample(std::size_t n, Rng& rng) const;

private:
    std::size_t capacity_;
    std::size_t head_ = 0; // insertion slot once full
    std::vector<Transition> buffer_;
};

// logistic and softplus maps keeping q in (0,1) and gamma_hat/slope positive
double logistic(double theta);
double logistic_inverse(double y);
double softplus(double theta);
double softplus_inverse(double y);

// Unconstrained proxies for the relative-value parameters.
// theta = [q-proxy, gamma-proxy] for h(q, gamma_hat), plus a slope proxy for
// the extended form h(q, gamma0, s).
struct ReparamVars {
    std::vector<double> theta;

    static ReparamVars basic(double q, double gamma_hat);
    static ReparamVars extended(double q, double gamma0, double slope);

    bool is_extended() const { return theta.size() == 3; }
    double q() const { return logistic(theta[0]); }
    double gamma_hat() const { return softplus(theta[1]); }
    double slope() const { return softplus(theta[2]); }

    double value(const Transition& t, bool next) const;
    double value_b(double b) const;                  // basic form
    double value_bg(double b, double gamma) const;   // extended form
};

// analytic gradient of L = (1/2N) sum (H_i - h(B_i))^2 with respect to theta;
// targets H_i are treated as constants
std::vector<double> minibatch_grad(const ReparamVars& vars, double g_hat,
                                   const std::vector<Transition>& batch);

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    long step = 0;
};

// one Adam descent step on theta (in place)
void adam_step(AdamState& state, std::vector<double>& theta,
               const std::vector<double>& grad, double learning_rate,
               const AgentConfig& config);

class Agent {
public:
    Agent(PolicyKind kind, Scheme scheme, double capacity_c, AgentConfig config);

    // epsilon-greedy action: policy action with probability 1-epsilon,
    // uniform on [0, B] otherwise
    double act(const SystemState& state, Rng& rng);

    // deterministic policy action with the current parameters
    double policy_action(const SystemState& state) const;

    // TD update of the throughput estimate; returns the updated g_hat
    double td_step(const Transition& t);

    // EMA updates of the e/c-hat (optimistic) or p (robust) estimates
    void update_aux(double b, double b_next, double action);

    // sample a minibatch and take one Adam step on the value-fit loss;
    // no-op while the replay memory is empty
    void minibatch_update(Rng& rng);

    // One full loop body: act, step the environment, push the transition,
    // TD update, auxiliary updates (schemes without energy lookahead),
    // minibatch regression; returns the realized reward. Environment draws
    // come from env_rng and agent draws (exploration, minibatch sampling)
    // from agent_rng, so schemes sharing env_rng see identical arrival and
    // SNR streams.
    double agent_step(Environment& env, Rng& env_rng, Rng& agent_rng);

    void set_rates(double alpha1, double alpha2, double alpha3);
    void set_epsilon(double epsilon);

    PolicyKind kind() const { return kind_; }
    Scheme scheme() const { return scheme_; }
    const ReparamVars& reparam() const { return reparam_; }
    double g_hat() const { return g_hat_; }
    double e_estimate() const { return e_; }
    double c_hat_estimate() const { return c_hat_; }
    double p_estimate() const { return p_; }
    const ReplayMemory& memory() const { return memory_; }
    long step_count() const { return step_count_; }

    // key-value text snapshot for checkpoint/resume (hexfloat, exact)
    void save(std::ostream& out) const;
    static Agent load(std::istream& in);

private:
    OptimisticParams optimistic_params(const SystemState& state) const;
    RobustParams robust_params(const SystemState& state) const;
    double effective_gamma_hat(const SystemState& state) const;

    PolicyKind kind_;
    Scheme scheme_;
    double capacity_c_;
    AgentConfig config_;
    ReparamVars reparam_;
    AdamState adam_;
    ReplayMemory memory_;
    double g_hat_ = 0.0;
    double e_ = 0.0;
    double c_hat_ = 0.0;
    double p_ = 0.0;
    long step_count_ = 0;
};

} // namespace ehpc
