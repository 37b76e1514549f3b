#pragma once

#include <cmath>
#include <cstdint>

namespace ehpc {

// Deterministic splittable PRNG. Every stream is derived from a (seed, key)
// pair through splitmix64, so substreams for episodes/cells are independent
// and reproducible regardless of platform or thread scheduling. Floating
// point draws are generated from the raw 64-bit output directly instead of
// going through std::*_distribution, which keeps byte-identical output
// across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    Rng(std::uint64_t seed, std::uint64_t key) {
        // mix the key into the seed with one splitmix round each
        state_ = mix(seed + 0x9e3779b97f4a7c15ULL * (key + 1));
    }

    // derive an independent substream
    Rng split(std::uint64_t key) const {
        return Rng(mix(state_ + 0xbf58476d1ce4e5b9ULL), key);
    }

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix(state_);
    }

    // uniform on [0, 1)
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // uniform on [0, hi]
    double uniform(double hi) { return next_double() * hi; }

    // uniform on [lo, hi]
    double uniform(double lo, double hi) { return lo + next_double() * (hi - lo); }

    bool bernoulli(double prob) { return next_double() < prob; }

    // exponential with the given rate
    double exponential(double rate) {
        return -std::log1p(-next_double()) / rate;
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
};

} // namespace ehpc
