#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <variant>

#include "ehpc/rng.hpp"

namespace ehpc {

// ---------------------------------------------------------------------------
// Scalar primitives
// ---------------------------------------------------------------------------

double clip(double x, double lo, double hi);
double upper_clip(double x, double hi);
double lower_clip(double x, double lo);

// instantaneous rate log(1 + x), nats per channel use
double rate(double x);

// marginal rate r'(x) = 1 / (1 + x)
inline double rate_slope(double x) { return 1.0 / (1.0 + x); }

// battery recursion: min(b - u + e, c), enforcing energy causality
double battery_step(double b, double u, double e_arrival, double c);

// ---------------------------------------------------------------------------
// Energy arrival models
// ---------------------------------------------------------------------------

struct OnePointArrival {
    double e = 0.0; // constant arrival, e >= 0
};

struct BernoulliArrival {
    double prob = 0.0;      // probability of a full-magnitude arrival
    double magnitude = 1.0; // arrival size (the battery capacity in scenarios)
};

struct ExponentialArrival {
    double rate = 1.0; // lambda > 0, mean 1/lambda
};

struct UniformArrival {
    double upper = 1.0; // uniform on [0, upper]
};

class EnergyArrivalModel {
public:
    using Variant =
        std::variant<OnePointArrival, BernoulliArrival, ExponentialArrival, UniformArrival>;

    EnergyArrivalModel(OnePointArrival m);     // NOLINT(google-explicit-constructor)
    EnergyArrivalModel(BernoulliArrival m);    // NOLINT
    EnergyArrivalModel(ExponentialArrival m);  // NOLINT
    EnergyArrivalModel(UniformArrival m);      // NOLINT

    double mean() const;

    // clipped mean E[min(E, x)], closed form per variant
    double clipped_mean(double x) const;

    // dynamic mean-to-capacity ratio: clipped_mean(x)/x, with the limit
    // 1 - P{E = 0} at x = 0
    double dmcr(double x) const;

    double sample(Rng& rng) const;

    const Variant& variant() const { return v_; }

private:
    Variant v_;
};

enum class ArrivalFamily { Bernoulli, Exponential, Uniform };

ArrivalFamily family_from_name(const std::string& name);
std::string family_name(ArrivalFamily family);

// mean-to-capacity ratio of the family as a function of the nominal MCR
double mcr(ArrivalFamily family, double nmcr);

// ---------------------------------------------------------------------------
// Channel models
// ---------------------------------------------------------------------------

struct DeterministicChannel {
    double gamma = 1.0;
};

struct RayleighChannel {}; // SNR coefficient ~ exponential with unit mean

class ChannelModel {
public:
    using Variant = std::variant<DeterministicChannel, RayleighChannel>;

    ChannelModel(DeterministicChannel m); // NOLINT
    ChannelModel(RayleighChannel m);      // NOLINT

    double sample(Rng& rng) const;
    bool is_deterministic() const;
    const Variant& variant() const { return v_; }

private:
    Variant v_;
};

// ---------------------------------------------------------------------------
// Scenario derivation
// ---------------------------------------------------------------------------

struct ScenarioSpec {
    double capacity_c;
    EnergyArrivalModel arrival_model;
    ChannelModel channel_model;
    double nmcr;
    double nsnr_db;
};

// Derives capacity and the family parameter from (family, NMCR, NSNR):
// clipped mean = 10^(NSNR/10), c = clipped mean / MCR, mean arrival = NMCR*c.
// The channel defaults to Rayleigh.
ScenarioSpec scenario_from(ArrivalFamily family, double nmcr, double nsnr_db);

struct SystemState {
    double battery = 0.0;
    double gamma = 0.0;
    std::optional<double> lookahead_energy;
    std::optional<double> lookahead_gamma;
};

// Slot-by-slot simulator of the battery recursion. The next arrival and the
// next SNR coefficient are pre-drawn each slot, so lookahead schemes read
// them noiselessly from the state while non-lookahead schemes ignore them.
// A fixed rng stream therefore produces identical traces for every scheme
// (common random numbers).
class Environment {
public:
    explicit Environment(ScenarioSpec scenario) : scenario_(std::move(scenario)) {}

    // draws the initial state; initial battery uniform on [0, c]
    void reset(Rng& rng);
    // resets with a fixed initial battery level
    void reset(double b0, Rng& rng);

    // consumes u this slot, returns the realized reward r(gamma*u), and
    // advances to the next state
    double step(double u, Rng& rng);

    const SystemState& state() const { return state_; }
    const ScenarioSpec& scenario() const { return scenario_; }
    double capacity() const { return scenario_.capacity_c; }

private:
    ScenarioSpec scenario_;
    SystemState state_;
};

} // namespace ehpc
