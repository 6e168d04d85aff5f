#pragma once

#include <cstdint>
#include <random>

namespace truspy {

/// One step of the splitmix64 sequence. Used for seed derivation so that
/// per-trial and per-purpose streams are reproducible from a single master
/// seed: trial_seed = splitmix64(master + trial_index), sub-stream seed =
/// splitmix64(trial_seed ^ tag).
inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline uint64_t derive_seed(uint64_t base, uint64_t tag) {
    return splitmix64(base ^ splitmix64(tag));
}

/// Deterministic random source. mt19937_64 output is pinned by the standard,
/// and all bounded draws below avoid std::uniform_*_distribution (whose
/// mapping is implementation-defined), so identical seeds give identical
/// streams on every platform.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, bound). bound must be > 0. Plain modulo reduction;
    /// the bias at simulator-scale bounds is below 2^-40.
    uint64_t below(uint64_t bound) { return next_u64() % bound; }

    uint8_t byte() { return static_cast<uint8_t>(below(256)); }

    /// Uniform in [0, 1) with 53-bit resolution.
    double unit() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// True with probability p. Always consumes one draw, so toggling p
    /// never shifts the stream for later consumers.
    bool bernoulli(double p) { return unit() < p; }

private:
    std::mt19937_64 engine_;
};

} // namespace truspy
