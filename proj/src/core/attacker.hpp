#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "core/cache.hpp"
#include "core/datapath.hpp"
#include "core/victim.hpp"

namespace truspy {

struct AttackConfig {
    uint32_t samples_per_byte = 200;
    uint64_t probe_threshold_cycles = 0; // evicted = measured latency > threshold
    double noise_flip_probability = 0.0; // independent flip of each evicted flag
    bool permissive_probe = false;       // skip policy-denied sets instead of failing
};

/// Step 1: the exact set indices covered by every table line, ascending.
std::vector<uint32_t> identify_target_sets(const TableLayout& layout,
                                           const CacheGeometry& geometry);

/// Step 2: fill every REE-eligible way of the target sets.
uint64_t prime(Cache& cache, std::span<const uint32_t> target_sets);

struct ProbeObservation {
    uint32_t set_index;
    bool evicted;
};

/// Step 4: re-access the primed addresses in ascending set order, measure
/// each load as a REE read through the active path scheme, and classify the
/// set as evicted when any of its loads exceeded the threshold. Each set's
/// flag then flips independently with the configured noise probability.
/// Probe accesses refill, so REE occupancy is restored afterwards.
std::vector<ProbeObservation> probe(Cache& cache, const LatencyParameters& params,
                                    PathScheme scheme,
                                    std::span<const uint32_t> target_sets,
                                    const AttackConfig& config, Rng& rng);

struct Sample {
    Plaintext plaintext;
    std::vector<ProbeObservation> observations;
};

struct CollectResult {
    std::vector<Sample> samples;
    uint64_t victim_triggers_denied = 0;
};

/// Steps 2-4 in a loop: prime, trigger the victim with a fresh random
/// plaintext, probe. `victim_gate` models token-gated triggering: when it
/// returns false the victim does not run that round (the plaintext draw and
/// probe still happen, keeping the stream stable).
CollectResult collect_samples(Cache& cache, const VictimKey& key,
                              const TableLayout& layout,
                              const LatencyParameters& params, PathScheme scheme,
                              const AttackConfig& config,
                              const VictimOptions& victim_options, Rng& rng,
                              const std::function<bool()>& victim_gate = {});

struct CandidateScore {
    uint8_t guess; // high-bit value, 0 .. 2^recoverable_bits - 1
    double score;  // mean evicted flag at the predicted set, in [0, 1]
};

struct ByteRecovery {
    std::vector<CandidateScore> ranked_candidates; // descending score, ties by guess
    uint8_t recovered_high_bits = 0;
};

struct AttackResult {
    std::array<ByteRecovery, 16> per_byte;
    uint64_t samples_used = 0;
    bool success = false; // set by evaluate_against_key
};

/// Step 5: for each key byte and each high-bit guess g, predict the set the
/// lookup lands in under that guess (low bits zero) and score g by the mean
/// evicted flag observed there. Throws Errc::InsufficientData on zero samples.
AttackResult analyze(std::span<const Sample> samples, const TableLayout& layout,
                     const CacheGeometry& geometry);

uint8_t true_high_bits(uint8_t key_byte, const TableLayout& layout,
                       const CacheGeometry& geometry);

/// Rank (0-based) of the true high bits in the candidate list.
uint32_t rank_of_true_guess(const ByteRecovery& recovery, uint8_t truth);

/// Fills `success` (all 16 top-ranked guesses correct) from the planted key.
void evaluate_against_key(AttackResult& result, const VictimKey& key,
                          const TableLayout& layout, const CacheGeometry& geometry);

/// Threshold classifier for the timing countermeasure experiments: learns the
/// midpoint of the per-world mean latencies on the first train_fraction of
/// the events and reports held-out accuracy; exact-threshold ties score half.
/// Throws Errc::InsufficientData when either world lacks train or test events.
double world_distinguisher(std::span<const TransferEvent> events, double train_fraction);

/// Labeled DRAM-read transfers, alternating REE/TEE, for the distinguisher.
std::vector<TransferEvent> generate_labeled_transfers(const LatencyParameters& params,
                                                      PathScheme scheme,
                                                      uint64_t count, Rng& rng);

} // namespace truspy
