#include "ehpc/core.hpp"

#include <cmath>

namespace ehpc {

double clip(double x, double lo, double hi) {
    if (lo > hi) {
        throw std::invalid_argument("clip: lo > hi");
    }
    return std::min(std::max(x, lo), hi);
}

double upper_clip(double x, double hi) { return std::min(x, hi); }

double lower_clip(double x, double lo) { return std::max(x, lo); }

double rate(double x) {
    if (x < 0.0) {
        throw std::domain_error("rate: negative argument");
    }
    return std::log1p(x);
}

double battery_step(double b, double u, double e_arrival, double c) {
    if (b > c) {
        throw std::invalid_argument("battery_step: battery above capacity");
    }
    if (u > b) {
        throw std::invalid_argument("battery_step: energy causality violated (u > b)");
    }
    if (u < 0.0 || e_arrival < 0.0) {
        throw std::invalid_argument("battery_step: negative energy");
    }
    return std::min(b - u + e_arrival, c);
}

// ---------------------------------------------------------------------------
// EnergyArrivalModel
// ---------------------------------------------------------------------------

namespace {

void validate(const OnePointArrival& m) {
    if (m.e < 0.0) throw std::invalid_argument("OnePointArrival: e < 0");
}

void validate(const BernoulliArrival& m) {
    if (m.prob < 0.0 || m.prob > 1.0)
        throw std::invalid_argument("BernoulliArrival: prob outside [0,1]");
    if (m.magnitude <= 0.0) throw std::invalid_argument("BernoulliArrival: magnitude <= 0");
}

void validate(const ExponentialArrival& m) {
    if (m.rate <= 0.0) throw std::invalid_argument("ExponentialArrival: rate <= 0");
}

void validate(const UniformArrival& m) {
    if (m.upper <= 0.0) throw std::invalid_argument("UniformArrival: upper <= 0");
}

} // namespace

EnergyArrivalModel::EnergyArrivalModel(OnePointArrival m) : v_(m) { validate(m); }
EnergyArrivalModel::EnergyArrivalModel(BernoulliArrival m) : v_(m) { validate(m); }
EnergyArrivalModel::EnergyArrivalModel(ExponentialArrival m) : v_(m) { validate(m); }
EnergyArrivalModel::EnergyArrivalModel(UniformArrival m) : v_(m) { validate(m); }

double EnergyArrivalModel::mean() const {
    return std::visit(
        [](const auto& m) -> double {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, OnePointArrival>) {
                return m.e;
            } else if constexpr (std::is_same_v<T, BernoulliArrival>) {
                return m.prob * m.magnitude;
            } else if constexpr (std::is_same_v<T, ExponentialArrival>) {
                return 1.0 / m.rate;
            } else {
                return m.upper / 2.0;
            }
        },
        v_);
}

double EnergyArrivalModel::clipped_mean(double x) const {
    if (x < 0.0) {
        throw std::domain_error("clipped_mean: x < 0");
    }
    return std::visit(
        [x](const auto& m) -> double {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, OnePointArrival>) {
                return std::min(m.e, x);
            } else if constexpr (std::is_same_v<T, BernoulliArrival>) {
                return m.prob * std::min(m.magnitude, x);
            } else if constexpr (std::is_same_v<T, ExponentialArrival>) {
                return -std::expm1(-m.rate * x) / m.rate;
            } else {
                if (x >= m.upper) return m.upper / 2.0;
                return x - x * x / (2.0 * m.upper);
            }
        },
        v_);
}

double EnergyArrivalModel::dmcr(double x) const {
    if (x < 0.0) {
        throw std::domain_error("dmcr: x < 0");
    }
    if (x == 0.0) {
        // limit 1 - P{E = 0}
        return std::visit(
            [](const auto& m) -> double {
                using T = std::decay_t<decltype(m)>;
                if constexpr (std::is_same_v<T, OnePointArrival>) {
                    return m.e > 0.0 ? 1.0 : 0.0;
                } else if constexpr (std::is_same_v<T, BernoulliArrival>) {
                    return m.prob;
                } else {
                    return 1.0; // continuous distributions put no mass at 0
                }
            },
            v_);
    }
    return clipped_mean(x) / x;
}

double EnergyArrivalModel::sample(Rng& rng) const {
    return std::visit(
        [&rng](const auto& m) -> double {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, OnePointArrival>) {
                return m.e;
            } else if constexpr (std::is_same_v<T, BernoulliArrival>) {
                return rng.bernoulli(m.prob) ? m.magnitude : 0.0;
            } else if constexpr (std::is_same_v<T, ExponentialArrival>) {
                return rng.exponential(m.rate);
            } else {
                return rng.uniform(m.upper);
            }
        },
        v_);
}

// ---------------------------------------------------------------------------
// Families and scenario derivation
// ---------------------------------------------------------------------------

ArrivalFamily family_from_name(const std::string& name) {
    if (name == "bernoulli") return ArrivalFamily::Bernoulli;
    if (name == "exponential") return ArrivalFamily::Exponential;
    if (name == "uniform") return ArrivalFamily::Uniform;
    throw std::invalid_argument("unknown arrival family: " + name);
}

std::string family_name(ArrivalFamily family) {
    switch (family) {
        case ArrivalFamily::Bernoulli: return "bernoulli";
        case ArrivalFamily::Exponential: return "exponential";
        case ArrivalFamily::Uniform: return "uniform";
    }
    throw std::logic_error("bad family tag");
}

double mcr(ArrivalFamily family, double nmcr) {
    switch (family) {
        case ArrivalFamily::Bernoulli:
            if (nmcr <= 0.0 || nmcr > 1.0)
                throw std::domain_error("mcr: Bernoulli NMCR outside (0,1]");
            return nmcr;
        case ArrivalFamily::Exponential:
            if (nmcr <= 0.0) throw std::domain_error("mcr: Exponential NMCR <= 0");
            return nmcr * -std::expm1(-1.0 / nmcr);
        case ArrivalFamily::Uniform:
            if (nmcr <= 0.0 || nmcr > 1.0)
                throw std::domain_error("mcr: Uniform NMCR outside (0,1]");
            if (nmcr <= 0.5) return nmcr;
            return 1.0 - 1.0 / (4.0 * nmcr);
    }
    throw std::logic_error("bad family tag");
}

ScenarioSpec scenario_from(ArrivalFamily family, double nmcr, double nsnr_db) {
    const double mu_bar = std::pow(10.0, nsnr_db / 10.0);
    const double c = mu_bar / mcr(family, nmcr);
    auto arrival = [&]() -> EnergyArrivalModel {
        switch (family) {
            case ArrivalFamily::Bernoulli:
                return BernoulliArrival{nmcr, c};
            case ArrivalFamily::Exponential:
                return ExponentialArrival{1.0 / (nmcr * c)};
            case ArrivalFamily::Uniform:
                return UniformArrival{2.0 * nmcr * c};
        }
        throw std::logic_error("bad family tag");
    }();
    return ScenarioSpec{c, arrival, ChannelModel(RayleighChannel{}), nmcr, nsnr_db};
}

// ---------------------------------------------------------------------------
// ChannelModel
// ---------------------------------------------------------------------------

ChannelModel::ChannelModel(DeterministicChannel m) : v_(m) {
    if (m.gamma < 0.0) throw std::invalid_argument("DeterministicChannel: gamma < 0");
}

ChannelModel::ChannelModel(RayleighChannel m) : v_(m) {}

double ChannelModel::sample(Rng& rng) const {
    if (const auto* d = std::get_if<DeterministicChannel>(&v_)) {
        return d->gamma;
    }
    return rng.exponential(1.0);
}

bool ChannelModel::is_deterministic() const {
    return std::holds_alternative<DeterministicChannel>(v_);
}

// ---------------------------------------------------------------------------
// Environment
// ---------------------------------------------------------------------------

void Environment::reset(Rng& rng) { reset(rng.uniform(scenario_.capacity_c), rng); }

void Environment::reset(double b0, Rng& rng) {
    if (b0 < 0.0 || b0 > scenario_.capacity_c) {
        throw std::invalid_argument("Environment::reset: b0 outside [0,c]");
    }
    state_.battery = b0;
    state_.gamma = scenario_.channel_model.sample(rng);
    state_.lookahead_energy = scenario_.arrival_model.sample(rng);
    state_.lookahead_gamma = scenario_.channel_model.sample(rng);
}

double Environment::step(double u, Rng& rng) {
    const double reward = rate(state_.gamma * u);
    state_.battery = battery_step(state_.battery, u, *state_.lookahead_energy,
                                  scenario_.capacity_c);
    state_.gamma = *state_.lookahead_gamma;
    state_.lookahead_energy = scenario_.arrival_model.sample(rng);
    state_.lookahead_gamma = scenario_.channel_model.sample(rng);
    return reward;
}

} // namespace ehpc
