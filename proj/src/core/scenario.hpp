#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "core/attacker.hpp"
#include "core/cache.hpp"
#include "core/datapath.hpp"
#include "core/victim.hpp"

namespace truspy {

struct AtpSettings {
    uint64_t token_ttl = 1000;       // logical ticks
    bool token_gated_trigger = false; // victim runs only for a valid-token holder
    bool attacker_has_token = false;  // scenario grants the attacker a token
};

/// One fully resolved experiment description. Parsed strictly from JSON
/// (unknown keys are errors, missing keys take documented defaults) and
/// validated for internal consistency before any trial runs.
struct ScenarioConfig {
    CacheGeometry geometry;
    PartitionPolicy policy;
    LatencyParameters latency;
    PathScheme scheme = PathScheme::Baseline;

    TableLayout layout;               // resolved (auto-placed when unspecified)
    std::optional<VictimKey> fixed_key; // nullopt = fresh random key per trial
    VictimOptions victim_options;

    AttackConfig attack;
    uint64_t distinguisher_transfers = 10000;
    AtpSettings atp;

    uint32_t trials = 20;
    uint64_t seed = 1;

    static ScenarioConfig from_json(const nlohmann::json& doc); // throws Errc::Config
    static ScenarioConfig from_json_text(const std::string& text);

    /// Every field explicit, stable key order; the digest input and the
    /// form embedded in reports.
    nlohmann::ordered_json to_canonical_json() const;

    void validate() const; // throws Errc::Config with a field-level message
};

const char* to_string(PathScheme scheme);
PathScheme scheme_from_string(const std::string& s);
const char* to_string(PartitionPolicy::Kind kind);

/// FNV-1a 64 over the canonical JSON text, as "fnv1a64:<16 hex digits>".
std::string config_digest(const ScenarioConfig& config);

} // namespace truspy
