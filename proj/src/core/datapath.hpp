#pragma once

#include <cstdint>

#include "core/rng.hpp"
#include "core/world.hpp"

namespace truspy {

struct LatencyParameters {
    uint32_t dram_cycles = 200;
    uint32_t cache_hit_cycles = 10;
    uint32_t aes_decrypt_cycles = 40;
    uint32_t aes_encrypt_cycles = 40;
    uint32_t cta_delay_cycles = 0;
    uint32_t parallel_units = 1;
    uint32_t jitter_max = 0; // uniform additive noise bound, inclusive

    void validate() const; // throws Errc::Config
};

/// Which countermeasure path layout is wired in.
///   Baseline       — REE path adds nothing; TEE path adds the full crypto cost.
///   CtaDelay       — REE path additionally runs through the CTA delay circuit.
///   ParallelCrypto — TEE crypto is spread over parallel units; REE adds nothing.
enum class PathScheme : uint8_t { Baseline, CtaDelay, ParallelCrypto };

enum class Direction : uint8_t { Read, Write };

enum class PathId : uint8_t { ReePath, TeePath };

/// The MUX: the NS-bit alone decides which data path connects to the CPU.
inline PathId select_path(World ns_bit) {
    return ns_bit == World::REE ? PathId::ReePath : PathId::TeePath;
}

/// Ideal latency of crypto spread over `units` parallel units.
uint64_t parallel_crypto_cycles(uint32_t aes_cycles, uint32_t units);

/// Cycles the scheme adds on top of the memory access for this world and
/// direction (reads go through decrypt, writes through encrypt).
uint64_t path_cost(const LatencyParameters& params, PathScheme scheme,
                   World world, Direction direction);

/// Deterministic part of a transfer: memory base cost plus path cost,
/// jitter excluded. The seeded entry points below add uniform jitter in
/// [0, jitter_max] on top.
uint64_t deterministic_transfer_latency(const LatencyParameters& params,
                                        PathScheme scheme, World world,
                                        Direction direction, bool hit);

uint64_t read_transfer_latency(const LatencyParameters& params, PathScheme scheme,
                               World world, bool hit, Rng& rng);
uint64_t write_transfer_latency(const LatencyParameters& params, PathScheme scheme,
                                World world, bool hit, Rng& rng);

/// |REE read-path cost - TEE read-path cost|, jitter excluded. Zero means
/// the countermeasure equalized the paths exactly.
uint64_t equalization_gap(const LatencyParameters& params, PathScheme scheme);

struct TransferEvent {
    World world;
    Direction direction;
    bool cache_hit;
    uint64_t observed_cycles;
};

} // namespace truspy
