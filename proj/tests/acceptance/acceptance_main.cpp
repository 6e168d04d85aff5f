// Acceptance suite: one line per criterion, PASS/FAIL, nonzero exit when
// anything fails. Statistical checks run against exact binomial intervals
// computed in-process; every tolerance is pinned here, not configurable.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include <json.hpp>

#include "common/lru_reference.hpp"
#include "core/atp.hpp"
#include "core/errors.hpp"
#include "core/harness.hpp"

using namespace truspy;
using nlohmann::json;

namespace {

int g_failures = 0;

void criterion(int id, const std::string& name, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %d: %s%s%s\n", pass ? "PASS" : "FAIL", id, name.c_str(),
                detail.empty() ? "" : " -- ", detail.c_str());
    if (!pass)
        ++g_failures;
}

ScenarioConfig baseline_config(const std::string& policy_json, uint64_t seed) {
    json doc = json::parse(R"({
        "geometry": {"num_sets": 256, "associativity": 8, "line_size": 64},
        "latency": {"dram_cycles": 200, "cache_hit_cycles": 10,
                    "aes_decrypt_cycles": 40, "aes_encrypt_cycles": 40,
                    "cta_delay_cycles": 0, "parallel_units": 1, "jitter_max": 0},
        "path_scheme": "baseline",
        "victim": {"entry_size": 4, "num_tables": 4, "key": "random"},
        "attack": {"samples_per_byte": 200, "probe_threshold_cycles": 105,
                   "noise_flip_probability": 0.0, "distinguisher_transfers": 0},
        "trials": 20
    })");
    doc["policy"] = json::parse(policy_json);
    doc["seed"] = seed;
    return ScenarioConfig::from_json(doc);
}

/// Exact central binomial 99% acceptance interval [lo, hi] for n trials at
/// success probability p: lo is the largest k with P(X < k) <= 0.005, hi the
/// smallest k with P(X > k) <= 0.005.
std::pair<uint64_t, uint64_t> binomial_99_interval(uint64_t n, double p) {
    std::vector<long double> pmf(n + 1);
    // Iterative pmf to avoid overflow: pmf[0] = (1-p)^n, ratio step.
    const long double q = 1.0L - p;
    pmf[0] = std::pow(q, static_cast<long double>(n));
    for (uint64_t k = 1; k <= n; ++k)
        pmf[k] = pmf[k - 1] * (static_cast<long double>(n - k + 1) / k) *
                 (static_cast<long double>(p) / q);

    long double below = 0.0L;
    uint64_t lo = 0;
    for (uint64_t k = 0; k <= n; ++k) {
        if (below + pmf[k] > 0.005L) {
            lo = k;
            break;
        }
        below += pmf[k];
    }
    long double above = 0.0L;
    uint64_t hi = n;
    for (uint64_t k = n;; --k) {
        if (above + pmf[k] > 0.005L) {
            hi = k;
            break;
        }
        above += pmf[k];
        if (k == 0)
            break;
    }
    return {lo, hi};
}

struct RecoveryEvents {
    uint64_t total = 0;
    uint64_t correct = 0;
};

RecoveryEvents count_byte_recoveries(const TrialReport& report) {
    RecoveryEvents events;
    for (const TrialOutcome& t : report.trials) {
        if (t.status != TrialStatus::Ok)
            continue;
        for (size_t i = 0; i < 16; ++i) {
            ++events.total;
            if (t.recovered_high_bits[i] == t.true_high_bits[i])
                ++events.correct;
        }
    }
    return events;
}

void criterion_1_baseline_attack() {
    const auto start = std::chrono::steady_clock::now();
    const TrialReport report =
        run_scenario(baseline_config(R"({"kind": "shared"})", 0xbadc0de));
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    char detail[128];
    std::snprintf(detail, sizeof(detail), "success_rate=%.3f over %zu trials in %.1fs",
                  report.success_rate, report.trials.size(), elapsed);
    criterion(1, "baseline attack recovers every key",
              report.success_rate == 1.0 && report.trials.size() == 20 && elapsed < 30.0,
              detail);
}

void criterion_2_hardware_isolation() {
    const TrialReport report = run_scenario(
        baseline_config(R"({"kind": "hardware_way_split", "tee_ways": 4})", 0x5eed2));

    bool zero_evictions = true;
    for (const TrialOutcome& t : report.trials)
        zero_evictions = zero_evictions && t.cross_world_evictions == 0;

    const RecoveryEvents events = count_byte_recoveries(report);
    const auto [lo, hi] = binomial_99_interval(events.total, 1.0 / 16.0);

    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "cross_world_evictions=%llu, correct=%llu/%llu, 99%% interval [%llu, %llu]",
                  static_cast<unsigned long long>(report.cross_world_evictions_total),
                  static_cast<unsigned long long>(events.correct),
                  static_cast<unsigned long long>(events.total),
                  static_cast<unsigned long long>(lo), static_cast<unsigned long long>(hi));
    criterion(2, "hardware zero contention defeats the attack",
              zero_evictions && events.total >= 320 && events.correct >= lo &&
                  events.correct <= hi,
              detail);
}

void criterion_3_software_isolation() {
    // Strict mode: the attacker's prime of TEE-only sets is a policy violation.
    json doc = json::parse(R"({
        "geometry": {"num_sets": 256, "associativity": 8, "line_size": 64},
        "policy": {"kind": "software_set_allocation", "tee_set_begin": 128, "tee_set_end": 256},
        "victim": {"entry_size": 4, "num_tables": 4},
        "attack": {"samples_per_byte": 200, "probe_threshold_cycles": 105,
                   "distinguisher_transfers": 0},
        "trials": 20,
        "seed": 777
    })");
    const TrialReport strict = run_scenario(ScenarioConfig::from_json(doc));
    const bool all_violations =
        strict.policy_violation_trials == strict.trials.size();

    // Permissive mode: the probe silently sees nothing; recovery is chance.
    doc["attack"]["permissive_probe"] = true;
    const TrialReport permissive = run_scenario(ScenarioConfig::from_json(doc));
    const RecoveryEvents events = count_byte_recoveries(permissive);
    const auto [lo, hi] = binomial_99_interval(events.total, 1.0 / 16.0);

    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "violations=%llu/%zu, permissive correct=%llu/%llu within [%llu, %llu]",
                  static_cast<unsigned long long>(strict.policy_violation_trials),
                  strict.trials.size(), static_cast<unsigned long long>(events.correct),
                  static_cast<unsigned long long>(events.total),
                  static_cast<unsigned long long>(lo), static_cast<unsigned long long>(hi));
    criterion(3, "software zero contention defeats the attack",
              all_violations && events.total >= 320 && events.correct >= lo &&
                  events.correct <= hi,
              detail);
}

void criterion_4_timing_equalization() {
    LatencyParameters params;
    params.dram_cycles = 200;
    params.cache_hit_cycles = 10;
    params.aes_decrypt_cycles = 40;
    params.aes_encrypt_cycles = 40;
    params.cta_delay_cycles = 40;
    params.parallel_units = 1;

    const uint64_t gap = equalization_gap(params, PathScheme::CtaDelay);

    params.jitter_max = 8;
    Rng rng(0xd15ULL);
    const auto noisy = generate_labeled_transfers(params, PathScheme::CtaDelay, 10000, rng);
    const double noisy_accuracy = world_distinguisher(noisy, 0.5);

    LatencyParameters quiet = params;
    quiet.cta_delay_cycles = 0;
    quiet.jitter_max = 0;
    Rng rng2(0xd15ULL);
    const auto separable =
        generate_labeled_transfers(quiet, PathScheme::Baseline, 10000, rng2);
    const double baseline_accuracy = world_distinguisher(separable, 0.5);

    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "gap=%llu, equalized accuracy=%.4f, baseline accuracy=%.4f",
                  static_cast<unsigned long long>(gap), noisy_accuracy, baseline_accuracy);
    criterion(4, "CTA delay equalizes the worlds' timing",
              gap == 0 && noisy_accuracy >= 0.45 && noisy_accuracy <= 0.55 &&
                  baseline_accuracy == 1.0,
              detail);
}

void criterion_5_parallel_crypto() {
    LatencyParameters params;
    params.dram_cycles = 200;
    params.cache_hit_cycles = 10;
    params.aes_decrypt_cycles = 40;
    params.aes_encrypt_cycles = 40;

    // Ceiling oracle: smallest q with q * units >= aes.
    auto ceil_oracle = [](uint32_t aes, uint32_t units) {
        uint64_t q = 0;
        while (q * units < aes)
            ++q;
        return q;
    };

    bool ok = true;
    uint64_t previous = UINT64_MAX;
    std::string gaps;
    for (uint32_t units = 1; units <= 64; units *= 2) {
        LatencyParameters p = params;
        p.parallel_units = units;
        const uint64_t gap = equalization_gap(p, PathScheme::ParallelCrypto);
        ok = ok && gap <= previous && gap == ceil_oracle(40, units);
        previous = gap;
        gaps += std::to_string(gap) + (units == 64 ? "" : ",");
    }
    criterion(5, "parallel crypto gap shrinks with unit count", ok, "gaps=" + gaps);
}

void criterion_6_atp_integrity() {
    bool ok = true;
    std::string failure;
    auto expect = [&](bool condition, const char* what) {
        if (!condition && ok) {
            ok = false;
            failure = what;
        }
    };

    const std::vector<uint8_t> credential{1, 2, 3, 4};
    SecureStore store;
    TripleRegistry registry = TripleRegistry::default_registry();
    Rng rng(0xa7bULL);
    SubjectIdentity app{"app1", Role::APP, credential};
    SubjectIdentity ta{"ta", Role::TA, {}};

    // 1000 random write/read round trips are identity.
    for (int i = 0; i < 1000 && ok; ++i) {
        const Session session = authenticate_subject(app, credential);
        const Token token = issue_token(session, store, 1000, rng);
        std::vector<uint8_t> data(1 + rng.below(64));
        for (uint8_t& b : data)
            b = rng.byte();
        const uint64_t address = store.region_base() + rng.below(1 << 18);
        UnconstrainedItem udi{tp_mask(data, token), token};
        write_secure(app, token, udi, address, store, registry);
        const auto masked = read_secure(app, token, address, store, registry);
        expect(tp_mask(masked, token) == data, "round trip mismatch");
    }

    // Denials with the correct reasons.
    {
        const Session session = authenticate_subject(app, credential);
        const Token stale = issue_token(session, store, 10, rng);
        const Token fresh = issue_token(session, store, 10, rng);
        try {
            read_secure(app, stale, store.region_base(), store, registry);
            expect(false, "stale token accepted");
        } catch (const Error& e) {
            expect(e.code() == Errc::TokenInvalid && std::string(e.what()) == "Mismatch",
                   "stale token reason");
        }
        Token altered = fresh;
        altered.nonce[5] ^= 0x40;
        try {
            read_secure(app, altered, store.region_base(), store, registry);
            expect(false, "mismatched token accepted");
        } catch (const Error& e) {
            expect(e.code() == Errc::TokenInvalid && std::string(e.what()) == "Mismatch",
                   "mismatch reason");
        }
        store.advance_clock(10);
        try {
            read_secure(app, fresh, store.region_base(), store, registry);
            expect(false, "expired token accepted");
        } catch (const Error& e) {
            expect(e.code() == Errc::TokenInvalid && std::string(e.what()) == "Expired",
                   "expiry reason");
        }
    }

    // TA bypass read/write.
    {
        const std::vector<uint8_t> data{0x77, 0x88};
        ta_direct_access(ta, store.region_base() + 0x99, store, data);
        expect(*ta_direct_access(ta, store.region_base() + 0x99, store) == data,
               "TA bypass round trip");
    }

    // An APP with no valid token never touches the data region.
    {
        SecureStore fresh_store;
        SubjectIdentity mallory{"mallory", Role::APP, {9, 9}};
        Token no_token;
        no_token.subject_id = "mallory";
        for (int i = 0; i < 32; ++i) {
            try {
                UnconstrainedItem udi{{uint8_t(i + 1)}, no_token};
                write_secure(mallory, no_token, udi, fresh_store.region_base() + i,
                             fresh_store, registry);
            } catch (const Error&) {
            }
            try {
                read_secure(mallory, no_token, fresh_store.region_base() + i, fresh_store,
                            registry);
            } catch (const Error&) {
            }
        }
        expect(fresh_store.data_region().empty(), "untokened APP reached the store");
        bool touched = false;
        for (const AccessLogEntry& e : fresh_store.access_log())
            if (e.role == Role::APP && e.allowed &&
                (e.op == AccessOp::DataRead || e.op == AccessOp::DataWrite))
                touched = true;
        expect(!touched, "access log shows an allowed untokened APP access");
    }

    // Separation of duty over every registry entry.
    {
        SecureStore sod_store;
        Rng sod_rng(7);
        TripleRegistry sod;
        sod.add(Role::APP, "write", StoreRegion::Data, {"certifier_a", "atp"});
        sod.add(Role::APP, "read", StoreRegion::Data, {"certifier_b"});
        for (const TripleRegistry::Entry& entry : sod.entries()) {
            for (const std::string& certifier : entry.certifier_ids) {
                SubjectIdentity executor{certifier, entry.role, credential};
                const Session session = authenticate_subject(executor, credential);
                const Token token = issue_token(session, sod_store, 100, sod_rng);
                bool denied = false;
                try {
                    if (entry.operation == "write") {
                        UnconstrainedItem udi{tp_mask(std::vector<uint8_t>{1}, token),
                                              token};
                        write_secure(executor, token, udi, sod_store.region_base(),
                                     sod_store, sod);
                    } else {
                        read_secure(executor, token, sod_store.region_base(), sod_store,
                                    sod);
                    }
                } catch (const Error& e) {
                    denied = e.code() == Errc::TripleDenied;
                }
                expect(denied, "certifier executed its own triple");
            }
        }
    }

    criterion(6, "ATP integrity suite", ok, ok ? "" : failure);
}

void criterion_7_lru_oracle() {
    using truspy_test::ReferenceLru;
    Rng rng(0x10c4ULL);
    bool ok = true;
    uint64_t sequences = 0;
    for (int s = 0; s < 10000 && ok; ++s) {
        const uint32_t sets = 1u << rng.below(3);
        const uint32_t ways = 1u << (1 + rng.below(3));
        CacheGeometry g{sets, ways, 64};
        PartitionPolicy policy;
        switch (rng.below(3)) {
        case 0: policy = PartitionPolicy::shared(); break;
        case 1: policy = PartitionPolicy::hardware_way_split(ways / 2); break;
        default:
            policy = sets >= 2 ? PartitionPolicy::software_set_allocation(sets / 2, sets)
                               : PartitionPolicy::shared();
            break;
        }
        Cache cache(g, policy);
        ReferenceLru reference(g, policy);
        const uint64_t length = 50 + rng.below(150);
        for (uint64_t i = 0; i < length; ++i) {
            const World world = rng.below(2) == 0 ? World::REE : World::TEE;
            uint32_t set = uint32_t(rng.below(sets));
            if (!policy.set_allowed(world, set)) {
                const uint32_t half = sets / 2;
                set = world == World::TEE ? half + set % half : set % half;
            }
            const uint64_t address = (rng.below(3 * ways) * sets + set) * g.line_size;
            const AccessRecord got = cache.access(world, address);
            const ReferenceLru::Result want = reference.access(world, address);
            if (got.outcome != want.outcome ||
                (got.outcome == AccessOutcome::MissEvict &&
                 got.evicted_world != want.evicted_world)) {
                ok = false;
                break;
            }
        }
        ok = ok && cache.cross_world_evictions() == reference.cross_world_evictions();
        ++sequences;
    }
    criterion(7, "LRU matches the brute-force reference", ok && sequences == 10000,
              "sequences=" + std::to_string(sequences));
}

void criterion_8_determinism() {
    json doc = json::parse(R"({
        "victim": {"entry_size": 4, "num_tables": 4},
        "attack": {"samples_per_byte": 50, "distinguisher_transfers": 500},
        "latency": {"jitter_max": 4},
        "trials": 12,
        "seed": 424242
    })");
    const ScenarioConfig cfg = ScenarioConfig::from_json(doc);
    const std::string first = report_to_json(run_scenario(cfg)).dump(2);
    const std::string second = report_to_json(run_scenario(cfg)).dump(2);

    const auto sweep_once = [&] {
        std::string all;
        for (const TrialReport& r :
             sweep(cfg, "attack.noise_flip_probability", {"0", "0.1"}))
            all += report_to_json(r).dump(2);
        return all;
    };
    const std::string sweep_a = sweep_once();
    const std::string sweep_b = sweep_once();

    criterion(8, "reports are byte-identical under parallel re-runs",
              first == second && sweep_a == sweep_b,
              "report bytes=" + std::to_string(first.size()));
}

void criterion_9_noise_monotonicity() {
    const double flips[4] = {0.0, 0.1, 0.25, 0.4};
    double means[4] = {0, 0, 0, 0};
    bool all_ok = true;
    for (int i = 0; i < 4; ++i) {
        json doc = json::parse(R"({
            "victim": {"entry_size": 4, "num_tables": 4},
            "attack": {"samples_per_byte": 200, "probe_threshold_cycles": 105,
                       "distinguisher_transfers": 0},
            "trials": 20,
            "seed": 90210
        })");
        doc["attack"]["noise_flip_probability"] = flips[i];
        const TrialReport report = run_scenario(ScenarioConfig::from_json(doc));
        all_ok = all_ok && report.policy_violation_trials == 0;
        means[i] = report.mean_true_rank;
    }
    const bool monotone =
        means[0] <= means[1] && means[1] <= means[2] && means[2] <= means[3];
    char detail[128];
    std::snprintf(detail, sizeof(detail), "mean ranks: %.4f, %.4f, %.4f, %.4f", means[0],
                  means[1], means[2], means[3]);
    criterion(9, "true-guess rank degrades monotonically with noise",
              all_ok && monotone, detail);
}

} // namespace

int main() {
    criterion_1_baseline_attack();
    criterion_2_hardware_isolation();
    criterion_3_software_isolation();
    criterion_4_timing_equalization();
    criterion_5_parallel_crypto();
    criterion_6_atp_integrity();
    criterion_7_lru_oracle();
    criterion_8_determinism();
    criterion_9_noise_monotonicity();

    if (g_failures > 0) {
        std::printf("%d criterion(s) FAILED\n", g_failures);
        return 1;
    }
    std::printf("all 9 criteria passed\n");
    return 0;
}
