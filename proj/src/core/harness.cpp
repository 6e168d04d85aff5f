#include "core/harness.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include "core/atp.hpp"
#include "core/errors.hpp"

namespace truspy {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// Sub-stream tags, mixed into the trial seed via derive_seed().
constexpr uint64_t kAttackStream = 0x61747461636b; // "attack"
constexpr uint64_t kDistStream = 0x64697374;       // "dist"
constexpr uint64_t kAtpStream = 0x617470;          // "atp"

const char* to_string(TrialStatus status) {
    return status == TrialStatus::Ok ? "ok" : "policy_violation";
}

} // namespace

uint64_t trial_seed(uint64_t master_seed, uint32_t index) {
    return splitmix64(master_seed + index);
}

TrialOutcome run_single_trial(const ScenarioConfig& config, uint32_t index) {
    const auto start = std::chrono::steady_clock::now();

    TrialOutcome outcome;
    outcome.index = index;
    outcome.seed = trial_seed(config.seed, index);

    Rng attack_rng(derive_seed(outcome.seed, kAttackStream));
    Rng dist_rng(derive_seed(outcome.seed, kDistStream));

    const VictimKey key = [&] {
        if (config.fixed_key)
            return *config.fixed_key;
        VictimKey k;
        for (uint8_t& b : k)
            b = attack_rng.byte();
        return k;
    }();
    for (size_t i = 0; i < key.size(); ++i)
        outcome.true_high_bits[i] = true_high_bits(key[i], config.layout, config.geometry);

    Cache cache(config.geometry, config.policy);

    AtpSystem atp(derive_seed(outcome.seed, kAtpStream));
    if (config.atp.attacker_has_token) {
        const std::vector<uint8_t> credential{0x61, 0x74, 0x6b};
        atp.register_app("attacker", credential);
        atp.authenticate("attacker", credential);
        atp.issue_app_token("attacker", config.atp.token_ttl);
    }
    std::function<bool()> gate;
    if (config.atp.token_gated_trigger)
        gate = [&atp] { return atp.app_token_valid("attacker"); };

    try {
        CollectResult collected =
            collect_samples(cache, key, config.layout, config.latency, config.scheme,
                            config.attack, config.victim_options, attack_rng, gate);
        outcome.victim_triggers_denied = collected.victim_triggers_denied;
        outcome.samples_used = collected.samples.size();

        AttackResult result = analyze(collected.samples, config.layout, config.geometry);
        evaluate_against_key(result, key, config.layout, config.geometry);
        outcome.success = result.success;
        double rank_sum = 0.0;
        for (size_t i = 0; i < 16; ++i) {
            const double rank = rank_of_true_guess(result.per_byte[i],
                                                   outcome.true_high_bits[i]);
            outcome.per_byte_true_rank[i] = rank;
            outcome.recovered_high_bits[i] = result.per_byte[i].recovered_high_bits;
            rank_sum += rank;
        }
        outcome.mean_true_rank = rank_sum / 16.0;
    } catch (const Error& e) {
        if (e.code() != Errc::PolicyViolation)
            throw;
        outcome.status = TrialStatus::PolicyViolation;
    }
    outcome.cross_world_evictions = cache.cross_world_evictions();

    if (config.distinguisher_transfers > 0) {
        const auto transfers = generate_labeled_transfers(
            config.latency, config.scheme, config.distinguisher_transfers, dist_rng);
        outcome.distinguisher_accuracy = world_distinguisher(transfers, 0.5);
    }

    outcome.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return outcome;
}

TrialReport run_scenario(const ScenarioConfig& config) {
    config.validate();

    TrialReport report;
    report.config = config;
    report.digest = config_digest(config);
    report.equalization_gap_cycles = equalization_gap(config.latency, config.scheme);
    report.recoverable_bits_per_byte = recoverable_bits(config.layout, config.geometry);
    report.target_set_count = identify_target_sets(config.layout, config.geometry).size();

    report.trials.resize(config.trials);
    // At least two workers whenever there is anything to parallelize: trials
    // are slot-indexed and aggregation joins in trial order, so scheduling
    // can never change the report bytes.
    const uint32_t workers =
        std::min(config.trials, std::max(2u, std::thread::hardware_concurrency()));
    if (workers <= 1) {
        for (uint32_t i = 0; i < config.trials; ++i)
            report.trials[i] = run_single_trial(config, i);
    } else {
        std::vector<std::thread> pool;
        std::exception_ptr failure;
        std::mutex failure_mutex;
        pool.reserve(workers);
        for (uint32_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (uint32_t i = w; i < config.trials; i += workers)
                        report.trials[i] = run_single_trial(config, i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(failure_mutex);
                    if (!failure)
                        failure = std::current_exception();
                }
            });
        }
        for (auto& t : pool)
            t.join();
        if (failure)
            std::rethrow_exception(failure);
    }

    // Aggregate in trial order.
    uint64_t ok_trials = 0;
    double rank_sum = 0.0;
    std::array<double, 16> per_byte_sum{};
    double accuracy_sum = 0.0;
    for (const TrialOutcome& t : report.trials) {
        report.cross_world_evictions_total += t.cross_world_evictions;
        report.victim_triggers_denied_total += t.victim_triggers_denied;
        report.wall_seconds_total += t.wall_seconds;
        accuracy_sum += t.distinguisher_accuracy;
        if (t.status == TrialStatus::PolicyViolation) {
            ++report.policy_violation_trials;
            continue;
        }
        ++ok_trials;
        if (t.success)
            ++report.success_count;
        rank_sum += t.mean_true_rank;
        for (size_t i = 0; i < 16; ++i)
            per_byte_sum[i] += t.per_byte_true_rank[i];
    }
    if (config.trials > 0) {
        report.success_rate =
            static_cast<double>(report.success_count) / config.trials;
        report.mean_distinguisher_accuracy = accuracy_sum / config.trials;
    }
    if (ok_trials > 0) {
        report.mean_true_rank = rank_sum / static_cast<double>(ok_trials);
        for (size_t i = 0; i < 16; ++i)
            report.per_byte_mean_true_rank[i] =
                per_byte_sum[i] / static_cast<double>(ok_trials);
    }
    return report;
}

std::vector<TrialReport> sweep(const ScenarioConfig& base,
                               const std::string& param_path,
                               const std::vector<std::string>& values) {
    ordered_json canonical = base.to_canonical_json();

    std::string pointer = "/" + param_path;
    for (auto& c : pointer)
        if (c == '.')
            c = '/';
    const ordered_json::json_pointer location(pointer);
    if (!canonical.contains(location))
        throw Error(Errc::UnknownParameter,
                    "config has no parameter at '" + param_path + "'");
    const ordered_json current = canonical.at(location);
    if (!current.is_number() && !current.is_string() && !current.is_boolean())
        throw Error(Errc::UnknownParameter,
                    "parameter '" + param_path + "' is not a numeric or enum field");

    std::vector<TrialReport> reports;
    reports.reserve(values.size());
    for (const std::string& value : values) {
        ordered_json doc = canonical;
        ordered_json& slot = doc.at(location);
        try {
            if (current.is_string()) {
                slot = value;
            } else if (current.is_boolean()) {
                if (value == "true")
                    slot = true;
                else if (value == "false")
                    slot = false;
                else
                    throw Error(Errc::Config, "expected true/false for '" + param_path +
                                                  "', got '" + value + "'");
            } else if (current.is_number_float()) {
                slot = std::stod(value);
            } else if (current.is_number_unsigned()) {
                slot = static_cast<uint64_t>(std::stoull(value));
            } else {
                slot = static_cast<int64_t>(std::stoll(value));
            }
        } catch (const std::logic_error&) {
            throw Error(Errc::Config,
                        "value '" + value + "' does not fit parameter '" + param_path + "'");
        }

        TrialReport report = run_scenario(ScenarioConfig::from_json(doc));
        report.swept_param = param_path;
        report.swept_value = value;
        reports.push_back(std::move(report));
    }
    return reports;
}

ordered_json report_to_json(const TrialReport& report) {
    ordered_json doc;
    doc["schema"] = "truspy-report-v1";
    doc["config_digest"] = report.digest;
    doc["swept_param"] = report.swept_param;
    doc["swept_value"] = report.swept_value;
    doc["config"] = report.config.to_canonical_json();
    doc["derived"] = {{"equalization_gap_cycles", report.equalization_gap_cycles},
                      {"recoverable_bits_per_byte", report.recoverable_bits_per_byte},
                      {"target_set_count", report.target_set_count}};
    doc["aggregate"] = {
        {"trials", report.trials.size()},
        {"success_count", report.success_count},
        {"success_rate", report.success_rate},
        {"mean_true_rank", report.mean_true_rank},
        {"per_byte_mean_true_rank", report.per_byte_mean_true_rank},
        {"cross_world_evictions_total", report.cross_world_evictions_total},
        {"mean_distinguisher_accuracy", report.mean_distinguisher_accuracy},
        {"policy_violation_trials", report.policy_violation_trials},
        {"victim_triggers_denied_total", report.victim_triggers_denied_total},
    };
    ordered_json trials = ordered_json::array();
    for (const TrialOutcome& t : report.trials) {
        ordered_json row;
        row["index"] = t.index;
        row["seed"] = t.seed;
        row["status"] = to_string(t.status);
        row["success"] = t.success;
        row["mean_true_rank"] = t.mean_true_rank;
        row["per_byte_true_rank"] = t.per_byte_true_rank;
        row["recovered_high_bits"] = t.recovered_high_bits;
        row["true_high_bits"] = t.true_high_bits;
        row["cross_world_evictions"] = t.cross_world_evictions;
        row["distinguisher_accuracy"] = t.distinguisher_accuracy;
        row["samples_used"] = t.samples_used;
        row["victim_triggers_denied"] = t.victim_triggers_denied;
        trials.push_back(std::move(row));
    }
    doc["trials"] = std::move(trials);
    return doc;
}

const char* const kCsvHeader =
    "report_index,swept_param,swept_value,config_digest,trial_index,trial_seed,"
    "status,success,mean_true_rank,cross_world_evictions,distinguisher_accuracy,"
    "equalization_gap_cycles,samples_used,victim_triggers_denied";

namespace {

std::string csv_number(const json& v) {
    return json(v).dump(); // shortest round-trip form, same as the JSON reports
}

void append_report_rows(std::string& out, const json& report, size_t report_index) {
    const json& trials = report.at("trials");
    for (const json& t : trials) {
        out += std::to_string(report_index);
        out += ',';
        out += report.at("swept_param").get<std::string>();
        out += ',';
        out += report.at("swept_value").get<std::string>();
        out += ',';
        out += report.at("config_digest").get<std::string>();
        out += ',';
        out += csv_number(t.at("index"));
        out += ',';
        out += csv_number(t.at("seed"));
        out += ',';
        out += t.at("status").get<std::string>();
        out += ',';
        out += t.at("success").get<bool>() ? "true" : "false";
        out += ',';
        out += csv_number(t.at("mean_true_rank"));
        out += ',';
        out += csv_number(t.at("cross_world_evictions"));
        out += ',';
        out += csv_number(t.at("distinguisher_accuracy"));
        out += ',';
        out += csv_number(report.at("derived").at("equalization_gap_cycles"));
        out += ',';
        out += csv_number(t.at("samples_used"));
        out += ',';
        out += csv_number(t.at("victim_triggers_denied"));
        out += '\n';
    }
}

} // namespace

std::string reports_to_csv(const json& reports_doc) {
    std::string out = kCsvHeader;
    out += '\n';
    try {
        if (reports_doc.is_array()) {
            for (size_t i = 0; i < reports_doc.size(); ++i)
                append_report_rows(out, reports_doc[i], i);
        } else {
            append_report_rows(out, reports_doc, 0);
        }
    } catch (const json::exception& e) {
        throw Error(Errc::Config,
                    std::string("not a truspy report document: ") + e.what());
    }
    return out;
}

void write_text_file(const std::string& path, const std::string& content) {
    const std::filesystem::path p(path);
    std::error_code ec;
    if (p.has_parent_path())
        std::filesystem::create_directories(p.parent_path(), ec);
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error(Errc::IoError, "cannot open " + path + " for writing");
    out << content;
    out.flush();
    if (!out)
        throw Error(Errc::IoError, "failed writing " + path);
}

} // namespace truspy
