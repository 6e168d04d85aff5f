#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "core/errors.hpp"
#include "core/harness.hpp"

using namespace truspy;
using nlohmann::json;

namespace {

// Small but real: 2 tables keep the target-set count down, 40 samples are
// plenty for the noiseless shared-cache attack.
ScenarioConfig fast_config(uint32_t trials = 4) {
    json doc = json::parse(R"({
        "victim": {"num_tables": 2, "entry_size": 4},
        "attack": {"samples_per_byte": 40, "distinguisher_transfers": 200},
        "trials": 0,
        "seed": 11
    })");
    doc["trials"] = trials;
    return ScenarioConfig::from_json(doc);
}

} // namespace

TEST_CASE("zero trials produce an empty but valid report") {
    const TrialReport report = run_scenario(fast_config(0));
    CHECK(report.trials.empty());
    CHECK(report.success_rate == 0.0);
    CHECK(report.cross_world_evictions_total == 0);
    const auto doc = report_to_json(report);
    CHECK(doc.at("trials").empty());
    CHECK(doc.at("aggregate").at("trials") == 0);
}

TEST_CASE("trial seeds derive from the master seed and index") {
    const ScenarioConfig cfg = fast_config(3);
    const TrialReport report = run_scenario(cfg);
    for (uint32_t i = 0; i < 3; ++i)
        CHECK(report.trials[i].seed == trial_seed(cfg.seed, i));
    CHECK(trial_seed(cfg.seed, 0) != trial_seed(cfg.seed, 1));
}

TEST_CASE("identical config and seed give byte-identical reports") {
    const ScenarioConfig cfg = fast_config(6);
    const std::string a = report_to_json(run_scenario(cfg)).dump(2);
    const std::string b = report_to_json(run_scenario(cfg)).dump(2);
    CHECK(a == b);
}

TEST_CASE("noiseless shared-cache attack succeeds in every trial") {
    const TrialReport report = run_scenario(fast_config(4));
    CHECK(report.success_rate == 1.0);
    CHECK(report.mean_true_rank == 0.0);
    for (const TrialOutcome& t : report.trials) {
        CHECK(t.status == TrialStatus::Ok);
        CHECK(t.success);
        CHECK(t.samples_used == 40);
    }
}

TEST_CASE("aggregates are recomputable from the per-trial rows") {
    const TrialReport report = run_scenario(fast_config(5));
    uint64_t successes = 0;
    uint64_t evictions = 0;
    for (const TrialOutcome& t : report.trials) {
        if (t.success)
            ++successes;
        evictions += t.cross_world_evictions;
    }
    CHECK(report.success_count == successes);
    CHECK(report.success_rate == double(successes) / report.trials.size());
    CHECK(report.cross_world_evictions_total == evictions);
}

TEST_CASE("policy-violating scenarios report per-trial status") {
    json doc = json::parse(R"({
        "policy": {"kind": "software_set_allocation", "tee_set_begin": 128, "tee_set_end": 256},
        "victim": {"num_tables": 2, "entry_size": 4},
        "attack": {"samples_per_byte": 10, "distinguisher_transfers": 0},
        "trials": 3,
        "seed": 5
    })");
    const TrialReport strict = run_scenario(ScenarioConfig::from_json(doc));
    CHECK(strict.policy_violation_trials == 3);
    for (const TrialOutcome& t : strict.trials) {
        CHECK(t.status == TrialStatus::PolicyViolation);
        CHECK_FALSE(t.success);
    }

    doc["attack"]["permissive_probe"] = true;
    const TrialReport permissive = run_scenario(ScenarioConfig::from_json(doc));
    CHECK(permissive.policy_violation_trials == 0);
    for (const TrialOutcome& t : permissive.trials)
        CHECK(t.status == TrialStatus::Ok);
}

TEST_CASE("token gating without a token suppresses the attack") {
    json doc = json::parse(R"({
        "victim": {"num_tables": 2, "entry_size": 4},
        "attack": {"samples_per_byte": 20, "distinguisher_transfers": 0},
        "atp": {"token_gated_trigger": true},
        "trials": 2,
        "seed": 3
    })");
    const TrialReport gated = run_scenario(ScenarioConfig::from_json(doc));
    CHECK(gated.victim_triggers_denied_total == 2 * 20);
    CHECK(gated.cross_world_evictions_total == 0);

    doc["atp"]["attacker_has_token"] = true;
    const TrialReport tokened = run_scenario(ScenarioConfig::from_json(doc));
    CHECK(tokened.victim_triggers_denied_total == 0);
    CHECK(tokened.success_rate == 1.0);
}

TEST_CASE("sweep") {
    const ScenarioConfig base = fast_config(3);

    SUBCASE("noise sweep: success never increases with noise") {
        const auto reports =
            sweep(base, "attack.noise_flip_probability", {"0", "0.1", "0.25"});
        REQUIRE(reports.size() == 3);
        CHECK(reports[0].swept_param == "attack.noise_flip_probability");
        CHECK(reports[0].swept_value == "0");
        CHECK(reports[0].success_rate >= reports[1].success_rate);
        CHECK(reports[1].success_rate >= reports[2].success_rate);
        CHECK(reports[0].success_rate == 1.0);
    }

    SUBCASE("policy sweep: isolation kills the attack") {
        const auto reports = sweep(base, "policy.kind", {"shared", "hardware_way_split"});
        REQUIRE(reports.size() == 2);
        CHECK(reports[0].success_rate == 1.0);
        CHECK(reports[1].success_rate <= 0.3);
        CHECK(reports[1].cross_world_evictions_total == 0);
    }

    SUBCASE("empty values give an empty report list") {
        CHECK(sweep(base, "attack.samples_per_byte", {}).empty());
    }

    SUBCASE("unknown parameter paths are rejected") {
        CHECK_THROWS_AS(sweep(base, "attack.nope", {"1"}), Error);
        try {
            sweep(base, "attack.nope", {"1"});
        } catch (const Error& e) {
            CHECK(e.code() == Errc::UnknownParameter);
        }
    }

    SUBCASE("structured fields are not sweepable") {
        CHECK_THROWS_AS(sweep(base, "victim.table_bases", {"1"}), Error);
    }
}

TEST_CASE("report JSON round trips structurally") {
    const TrialReport report = run_scenario(fast_config(2));
    const auto doc = report_to_json(report);
    const auto reparsed = json::parse(doc.dump(2));
    CHECK(json(doc) == reparsed);
}

TEST_CASE("CSV has a header and one row per trial") {
    const TrialReport report = run_scenario(fast_config(4));
    const std::string csv = reports_to_csv(report_to_json(report));

    size_t lines = 0;
    for (char c : csv)
        if (c == '\n')
            ++lines;
    CHECK(lines == 1 + 4);
    CHECK(csv.rfind(kCsvHeader, 0) == 0);

    // Malformed documents are rejected.
    CHECK_THROWS_AS(reports_to_csv(json::parse(R"({"not": "a report"})")), Error);
}

TEST_CASE("write_text_file reports I/O failures") {
    CHECK_THROWS_AS(write_text_file("/proc/definitely/not/writable/x.json", "{}"),
                    Error);
    try {
        write_text_file("/proc/definitely/not/writable/x.json", "{}");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::IoError);
    }

    const auto path = std::filesystem::temp_directory_path() / "truspy_test_report.json";
    write_text_file(path.string(), "{}\n");
    std::ifstream in(path);
    std::string content((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());
    CHECK(content == "{}\n");
    std::filesystem::remove(path);
}
