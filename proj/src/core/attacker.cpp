#include "core/attacker.hpp"

#include <algorithm>
#include <set>

#include "core/errors.hpp"

namespace truspy {

std::vector<uint32_t> identify_target_sets(const TableLayout& layout,
                                           const CacheGeometry& geometry) {
    layout.validate(geometry);
    std::set<uint32_t> sets;
    for (uint64_t base : layout.table_bases) {
        const uint64_t lines = layout.lines_per_table(geometry);
        for (uint64_t l = 0; l < lines; ++l)
            sets.insert(set_index_of(base + l * geometry.line_size, geometry));
    }
    return {sets.begin(), sets.end()};
}

uint64_t prime(Cache& cache, std::span<const uint32_t> target_sets) {
    return cache.prime_world_lines(World::REE, target_sets);
}

namespace {

std::vector<uint32_t> ree_reachable_sets(const Cache& cache,
                                         std::span<const uint32_t> target_sets) {
    std::vector<uint32_t> reachable;
    reachable.reserve(target_sets.size());
    for (uint32_t set : target_sets)
        if (cache.policy().set_allowed(World::REE, set))
            reachable.push_back(set);
    return reachable;
}

} // namespace

std::vector<ProbeObservation> probe(Cache& cache, const LatencyParameters& params,
                                    PathScheme scheme,
                                    std::span<const uint32_t> target_sets,
                                    const AttackConfig& config, Rng& rng) {
    const CacheGeometry& geometry = cache.geometry();
    const auto [first_way, last_way] =
        cache.policy().way_range(World::REE, geometry);

    std::vector<ProbeObservation> observations;
    observations.reserve(target_sets.size());
    for (uint32_t set : target_sets) {
        bool evicted = false;
        if (cache.policy().set_allowed(World::REE, set)) {
            for (uint32_t w = first_way; w < last_way; ++w) {
                const uint64_t address = Cache::prime_address(World::REE, set, w, geometry);
                const AccessRecord rec = cache.access(World::REE, address);
                const bool hit = rec.outcome == AccessOutcome::Hit;
                const uint64_t latency =
                    read_transfer_latency(params, scheme, World::REE, hit, rng);
                if (latency > config.probe_threshold_cycles)
                    evicted = true;
            }
        } else if (!config.permissive_probe) {
            throw Error(Errc::PolicyViolation,
                        "REE probe of set " + std::to_string(set) +
                            " outside its allocated range");
        }
        // Unprimeable sets yield no signal in permissive mode.
        if (rng.bernoulli(config.noise_flip_probability))
            evicted = !evicted;
        observations.push_back({set, evicted});
    }
    return observations;
}

CollectResult collect_samples(Cache& cache, const VictimKey& key,
                              const TableLayout& layout,
                              const LatencyParameters& params, PathScheme scheme,
                              const AttackConfig& config,
                              const VictimOptions& victim_options, Rng& rng,
                              const std::function<bool()>& victim_gate) {
    const std::vector<uint32_t> target_sets =
        identify_target_sets(layout, cache.geometry());
    const std::vector<uint32_t> primeable =
        config.permissive_probe ? ree_reachable_sets(cache, target_sets) : target_sets;

    CollectResult result;
    result.samples.reserve(config.samples_per_byte);
    for (uint32_t s = 0; s < config.samples_per_byte; ++s) {
        cache.prime_world_lines(World::REE, primeable);

        Plaintext plaintext;
        for (uint8_t& b : plaintext)
            b = rng.byte();

        if (!victim_gate || victim_gate()) {
            trigger_victim(key, layout, plaintext, cache, victim_options, rng);
        } else {
            ++result.victim_triggers_denied;
        }

        result.samples.push_back(
            {plaintext, probe(cache, params, scheme, target_sets, config, rng)});
    }
    return result;
}

AttackResult analyze(std::span<const Sample> samples, const TableLayout& layout,
                     const CacheGeometry& geometry) {
    if (samples.empty())
        throw Error(Errc::InsufficientData, "analyze requires at least one sample");
    layout.validate(geometry);

    const uint32_t epl = layout.entries_per_line(geometry);
    const uint32_t bits = recoverable_bits(layout, geometry);
    const uint32_t guesses = 1u << bits;
    const uint32_t num_tables = static_cast<uint32_t>(layout.table_bases.size());

    // Per-sample eviction flags indexed by set for O(1) lookups below.
    std::vector<std::vector<uint8_t>> evicted_at(samples.size());
    for (size_t s = 0; s < samples.size(); ++s) {
        evicted_at[s].assign(geometry.num_sets, 0);
        for (const ProbeObservation& obs : samples[s].observations)
            evicted_at[s][obs.set_index] = obs.evicted ? 1 : 0;
    }

    AttackResult result;
    result.samples_used = samples.size();
    for (uint32_t byte = 0; byte < 16; ++byte) {
        ByteRecovery& recovery = result.per_byte[byte];
        recovery.ranked_candidates.reserve(guesses);
        const uint64_t base = layout.table_bases[byte % num_tables];
        for (uint32_t g = 0; g < guesses; ++g) {
            const uint8_t extended = static_cast<uint8_t>(g * epl);
            uint64_t hits = 0;
            for (size_t s = 0; s < samples.size(); ++s) {
                const uint8_t index = samples[s].plaintext[byte] ^ extended;
                const uint32_t set =
                    set_index_of(base + uint64_t(index) * layout.entry_size, geometry);
                hits += evicted_at[s][set];
            }
            recovery.ranked_candidates.push_back(
                {static_cast<uint8_t>(g),
                 static_cast<double>(hits) / static_cast<double>(samples.size())});
        }
        std::sort(recovery.ranked_candidates.begin(), recovery.ranked_candidates.end(),
                  [](const CandidateScore& a, const CandidateScore& b) {
                      if (a.score != b.score)
                          return a.score > b.score;
                      return a.guess < b.guess;
                  });
        recovery.recovered_high_bits = recovery.ranked_candidates.front().guess;
    }
    return result;
}

uint8_t true_high_bits(uint8_t key_byte, const TableLayout& layout,
                       const CacheGeometry& geometry) {
    const uint32_t epl = layout.entries_per_line(geometry);
    return epl >= 256 ? 0 : static_cast<uint8_t>(key_byte / epl);
}

uint32_t rank_of_true_guess(const ByteRecovery& recovery, uint8_t truth) {
    for (size_t i = 0; i < recovery.ranked_candidates.size(); ++i)
        if (recovery.ranked_candidates[i].guess == truth)
            return static_cast<uint32_t>(i);
    return static_cast<uint32_t>(recovery.ranked_candidates.size());
}

void evaluate_against_key(AttackResult& result, const VictimKey& key,
                          const TableLayout& layout, const CacheGeometry& geometry) {
    bool all_correct = true;
    for (uint32_t byte = 0; byte < 16; ++byte) {
        const uint8_t truth = true_high_bits(key[byte], layout, geometry);
        if (result.per_byte[byte].recovered_high_bits != truth)
            all_correct = false;
    }
    result.success = all_correct;
}

double world_distinguisher(std::span<const TransferEvent> events, double train_fraction) {
    const size_t train_count =
        static_cast<size_t>(static_cast<double>(events.size()) * train_fraction);

    uint64_t sum[2] = {0, 0};
    uint64_t n[2] = {0, 0};
    for (size_t i = 0; i < train_count; ++i) {
        const size_t w = static_cast<size_t>(events[i].world);
        sum[w] += events[i].observed_cycles;
        n[w] += 1;
    }
    uint64_t test_n[2] = {0, 0};
    for (size_t i = train_count; i < events.size(); ++i)
        test_n[static_cast<size_t>(events[i].world)] += 1;
    if (n[0] == 0 || n[1] == 0 || test_n[0] == 0 || test_n[1] == 0)
        throw Error(Errc::InsufficientData,
                    "world_distinguisher needs train and test events from both worlds");

    const double mean_ree = static_cast<double>(sum[0]) / static_cast<double>(n[0]);
    const double mean_tee = static_cast<double>(sum[1]) / static_cast<double>(n[1]);
    const double threshold = (mean_ree + mean_tee) / 2.0;
    const bool tee_above = mean_tee >= mean_ree;

    double credit = 0.0;
    for (size_t i = train_count; i < events.size(); ++i) {
        const double cycles = static_cast<double>(events[i].observed_cycles);
        if (cycles == threshold) {
            credit += 0.5;
            continue;
        }
        const World predicted = (cycles > threshold) == tee_above ? World::TEE : World::REE;
        if (predicted == events[i].world)
            credit += 1.0;
    }
    return credit / static_cast<double>(events.size() - train_count);
}

std::vector<TransferEvent> generate_labeled_transfers(const LatencyParameters& params,
                                                      PathScheme scheme,
                                                      uint64_t count, Rng& rng) {
    std::vector<TransferEvent> events;
    events.reserve(count);
    for (uint64_t i = 0; i < count; ++i) {
        const World world = (i % 2 == 0) ? World::REE : World::TEE;
        const uint64_t cycles =
            read_transfer_latency(params, scheme, world, /*hit=*/false, rng);
        events.push_back({world, Direction::Read, false, cycles});
    }
    return events;
}

} // namespace truspy
