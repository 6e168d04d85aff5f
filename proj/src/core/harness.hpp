#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "core/scenario.hpp"

namespace truspy {

enum class TrialStatus : uint8_t { Ok, PolicyViolation };

struct TrialOutcome {
    uint32_t index = 0;
    uint64_t seed = 0;
    TrialStatus status = TrialStatus::Ok;
    bool success = false;
    double mean_true_rank = 0.0;
    std::array<double, 16> per_byte_true_rank{};
    std::array<uint8_t, 16> recovered_high_bits{};
    std::array<uint8_t, 16> true_high_bits{};
    uint64_t cross_world_evictions = 0;
    double distinguisher_accuracy = 0.0;
    uint64_t samples_used = 0;
    uint64_t victim_triggers_denied = 0;
    double wall_seconds = 0.0; // never serialized; reports stay byte-stable
};

struct TrialReport {
    ScenarioConfig config;
    std::string digest;
    std::string swept_param; // empty unless produced by sweep()
    std::string swept_value;

    uint64_t equalization_gap_cycles = 0;
    uint32_t recoverable_bits_per_byte = 0;
    uint64_t target_set_count = 0;

    std::vector<TrialOutcome> trials;

    // Aggregates, recomputable from the per-trial rows.
    uint64_t success_count = 0;
    double success_rate = 0.0;
    double mean_true_rank = 0.0; // over Ok trials
    std::array<double, 16> per_byte_mean_true_rank{};
    uint64_t cross_world_evictions_total = 0;
    double mean_distinguisher_accuracy = 0.0;
    uint64_t policy_violation_trials = 0;
    uint64_t victim_triggers_denied_total = 0;
    double wall_seconds_total = 0.0; // not serialized
};

/// Seed of trial `index` under `master_seed`; documented so external tooling
/// can reproduce any single trial.
uint64_t trial_seed(uint64_t master_seed, uint32_t index);

/// Runs one trial in isolation. Deterministic in (config, trial_seed).
TrialOutcome run_single_trial(const ScenarioConfig& config, uint32_t index);

/// Runs `config.trials` independent trials (in parallel; aggregation joins in
/// trial order, so the report is byte-identical regardless of scheduling).
TrialReport run_scenario(const ScenarioConfig& config);

/// One report per value, in order. `param_path` is a dotted path into the
/// canonical config ("attack.noise_flip_probability", "policy.kind", ...).
/// Throws Errc::UnknownParameter when the path names no config field.
std::vector<TrialReport> sweep(const ScenarioConfig& base,
                               const std::string& param_path,
                               const std::vector<std::string>& values);

/// Canonical JSON form: stable key order, no timestamps or wall-clock
/// content, byte-identical for a fixed (config, seed).
nlohmann::ordered_json report_to_json(const TrialReport& report);

/// CSV over report documents (a single report object or an array of them)
/// as produced by report_to_json. One row per trial plus the fixed header.
std::string reports_to_csv(const nlohmann::json& reports_doc);

extern const char* const kCsvHeader;

/// Writes text to a file, creating parent directories. Throws Errc::IoError.
void write_text_file(const std::string& path, const std::string& content);

} // namespace truspy
