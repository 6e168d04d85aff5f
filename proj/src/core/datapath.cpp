#include "core/datapath.hpp"

#include "core/errors.hpp"

namespace truspy {

void LatencyParameters::validate() const {
    if (cache_hit_cycles >= dram_cycles)
        throw Error(Errc::Config, "latency.cache_hit_cycles must be < dram_cycles");
    if (parallel_units == 0)
        throw Error(Errc::Config, "latency.parallel_units must be >= 1");
}

uint64_t parallel_crypto_cycles(uint32_t aes_cycles, uint32_t units) {
    if (aes_cycles == 0)
        return 0;
    return (uint64_t(aes_cycles) + units - 1) / units;
}

uint64_t path_cost(const LatencyParameters& params, PathScheme scheme,
                   World world, Direction direction) {
    const uint32_t aes = direction == Direction::Read ? params.aes_decrypt_cycles
                                                      : params.aes_encrypt_cycles;
    switch (scheme) {
    case PathScheme::Baseline:
        return world == World::TEE ? aes : 0;
    case PathScheme::CtaDelay:
        return world == World::TEE ? aes : params.cta_delay_cycles;
    case PathScheme::ParallelCrypto:
        return world == World::TEE ? parallel_crypto_cycles(aes, params.parallel_units) : 0;
    }
    return 0;
}

uint64_t deterministic_transfer_latency(const LatencyParameters& params,
                                        PathScheme scheme, World world,
                                        Direction direction, bool hit) {
    const uint64_t base = hit ? params.cache_hit_cycles : params.dram_cycles;
    return base + path_cost(params, scheme, world, direction);
}

uint64_t read_transfer_latency(const LatencyParameters& params, PathScheme scheme,
                               World world, bool hit, Rng& rng) {
    return deterministic_transfer_latency(params, scheme, world, Direction::Read, hit) +
           rng.below(uint64_t(params.jitter_max) + 1);
}

uint64_t write_transfer_latency(const LatencyParameters& params, PathScheme scheme,
                                World world, bool hit, Rng& rng) {
    return deterministic_transfer_latency(params, scheme, world, Direction::Write, hit) +
           rng.below(uint64_t(params.jitter_max) + 1);
}

uint64_t equalization_gap(const LatencyParameters& params, PathScheme scheme) {
    const uint64_t ree = path_cost(params, scheme, World::REE, Direction::Read);
    const uint64_t tee = path_cost(params, scheme, World::TEE, Direction::Read);
    return ree > tee ? ree - tee : tee - ree;
}

} // namespace truspy
