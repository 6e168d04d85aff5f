#include "core/scenario.hpp"

#include <cinttypes>
#include <cstdio>
#include <set>

#include "core/errors.hpp"

namespace truspy {

using nlohmann::json;
using nlohmann::ordered_json;

const char* to_string(PathScheme scheme) {
    switch (scheme) {
    case PathScheme::Baseline: return "baseline";
    case PathScheme::CtaDelay: return "cta_delay";
    case PathScheme::ParallelCrypto: return "parallel_crypto";
    }
    return "?";
}

PathScheme scheme_from_string(const std::string& s) {
    if (s == "baseline") return PathScheme::Baseline;
    if (s == "cta_delay") return PathScheme::CtaDelay;
    if (s == "parallel_crypto") return PathScheme::ParallelCrypto;
    throw Error(Errc::Config, "path_scheme: unknown value '" + s + "'");
}

const char* to_string(PartitionPolicy::Kind kind) {
    switch (kind) {
    case PartitionPolicy::Kind::Shared: return "shared";
    case PartitionPolicy::Kind::HardwareWaySplit: return "hardware_way_split";
    case PartitionPolicy::Kind::SoftwareSetAllocation: return "software_set_allocation";
    }
    return "?";
}

namespace {

[[noreturn]] void config_error(const std::string& field, const std::string& what) {
    throw Error(Errc::Config, field + ": " + what);
}

/// Strict object reader: every key must be consumed exactly once.
class ObjectReader {
public:
    ObjectReader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
        if (!node_.is_object())
            config_error(path_, "expected an object");
    }

    ~ObjectReader() = default;

    template <typename T>
    T get(const std::string& key, T fallback) {
        mark(key);
        if (!node_.contains(key))
            return fallback;
        return read<T>(key);
    }

    template <typename T>
    std::optional<T> get_optional(const std::string& key) {
        mark(key);
        if (!node_.contains(key))
            return std::nullopt;
        return read<T>(key);
    }

    bool has(const std::string& key) {
        mark(key);
        return node_.contains(key);
    }

    const json& raw(const std::string& key) {
        mark(key);
        return node_.at(key);
    }

    void finish() const {
        for (auto it = node_.begin(); it != node_.end(); ++it) {
            if (seen_.count(it.key()) == 0)
                config_error(path_.empty() ? it.key() : path_ + "." + it.key(),
                             "unknown key");
        }
    }

    std::string child_path(const std::string& key) const {
        return path_.empty() ? key : path_ + "." + key;
    }

private:
    void mark(const std::string& key) { seen_.insert(key); }

    template <typename T>
    T read(const std::string& key) {
        try {
            return node_.at(key).get<T>();
        } catch (const json::exception& e) {
            config_error(child_path(key), "wrong type");
        }
    }

    const json& node_;
    std::string path_;
    std::set<std::string> seen_;
};

uint64_t auto_table_base(const PartitionPolicy& policy, const CacheGeometry& geometry) {
    if (policy.kind == PartitionPolicy::Kind::SoftwareSetAllocation)
        return uint64_t(policy.tee_set_begin) * geometry.line_size;
    return 0;
}

} // namespace

ScenarioConfig ScenarioConfig::from_json_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(Errc::Config, std::string("config is not valid JSON: ") + e.what());
    }
    return from_json(doc);
}

ScenarioConfig ScenarioConfig::from_json(const json& doc) {
    ScenarioConfig cfg;
    ObjectReader root(doc, "");

    if (root.has("geometry")) {
        ObjectReader g(root.raw("geometry"), "geometry");
        cfg.geometry.num_sets = g.get<uint32_t>("num_sets", 256);
        cfg.geometry.associativity = g.get<uint32_t>("associativity", 8);
        cfg.geometry.line_size = g.get<uint32_t>("line_size", 64);
        g.finish();
    }
    cfg.geometry.validate();

    if (root.has("policy")) {
        ObjectReader p(root.raw("policy"), "policy");
        const std::string kind = p.get<std::string>("kind", "shared");
        // Fields of the other kinds are accepted and ignored so that a
        // canonical config swept across policy.kind still parses.
        const uint32_t tee_ways =
            p.get<uint32_t>("tee_ways", cfg.geometry.associativity / 2);
        const uint32_t tee_begin =
            p.get<uint32_t>("tee_set_begin", cfg.geometry.num_sets / 2);
        const uint32_t tee_end = p.get<uint32_t>("tee_set_end", cfg.geometry.num_sets);
        if (kind == "shared") {
            cfg.policy = PartitionPolicy::shared();
        } else if (kind == "hardware_way_split") {
            cfg.policy = PartitionPolicy::hardware_way_split(tee_ways);
        } else if (kind == "software_set_allocation") {
            cfg.policy = PartitionPolicy::software_set_allocation(tee_begin, tee_end);
        } else {
            config_error("policy.kind", "unknown value '" + kind + "'");
        }
        p.finish();
    }
    cfg.policy.validate(cfg.geometry);

    if (root.has("latency")) {
        ObjectReader l(root.raw("latency"), "latency");
        cfg.latency.dram_cycles = l.get<uint32_t>("dram_cycles", 200);
        cfg.latency.cache_hit_cycles = l.get<uint32_t>("cache_hit_cycles", 10);
        cfg.latency.aes_decrypt_cycles = l.get<uint32_t>("aes_decrypt_cycles", 40);
        cfg.latency.aes_encrypt_cycles = l.get<uint32_t>("aes_encrypt_cycles", 40);
        cfg.latency.cta_delay_cycles = l.get<uint32_t>("cta_delay_cycles", 0);
        cfg.latency.parallel_units = l.get<uint32_t>("parallel_units", 1);
        cfg.latency.jitter_max = l.get<uint32_t>("jitter_max", 0);
        l.finish();
    }
    cfg.latency.validate();

    cfg.scheme = scheme_from_string(root.get<std::string>("path_scheme", "baseline"));

    uint32_t num_tables = 4;
    if (root.has("victim")) {
        ObjectReader v(root.raw("victim"), "victim");
        cfg.layout.entry_size = v.get<uint32_t>("entry_size", 4);
        num_tables = v.get<uint32_t>("num_tables", 4);
        if (num_tables == 0)
            config_error("victim.num_tables", "must be >= 1");
        auto bases = v.get_optional<std::vector<uint64_t>>("table_bases");
        if (bases)
            cfg.layout.table_bases = *bases;
        const std::string key = v.get<std::string>("key", "random");
        if (key != "random")
            cfg.fixed_key = key_from_hex(key);
        cfg.victim_options.decoy_accesses = v.get<uint32_t>("decoy_accesses", 0);
        v.finish();
    }
    if (cfg.layout.table_bases.empty()) {
        // Auto placement: contiguous line-aligned tables, starting at the
        // first TEE-eligible set so the layout is legal under every policy.
        const uint64_t base = auto_table_base(cfg.policy, cfg.geometry);
        const uint64_t stride =
            std::max<uint64_t>(cfg.layout.table_span_bytes(), cfg.geometry.line_size);
        for (uint32_t t = 0; t < num_tables; ++t)
            cfg.layout.table_bases.push_back(base + t * stride);
    } else if (cfg.layout.table_bases.size() != num_tables &&
               root.raw("victim").contains("num_tables")) {
        config_error("victim.num_tables", "contradicts the table_bases list length");
    }

    if (root.has("attack")) {
        ObjectReader a(root.raw("attack"), "attack");
        cfg.attack.samples_per_byte = a.get<uint32_t>("samples_per_byte", 200);
        cfg.attack.probe_threshold_cycles = a.get<uint64_t>("probe_threshold_cycles", 0);
        cfg.attack.noise_flip_probability =
            a.get<double>("noise_flip_probability", 0.0);
        cfg.attack.permissive_probe = a.get<bool>("permissive_probe", false);
        cfg.distinguisher_transfers = a.get<uint64_t>("distinguisher_transfers", 10000);
        a.finish();
    }
    if (cfg.attack.probe_threshold_cycles == 0) {
        // Default: midpoint of the deterministic REE hit and miss latencies.
        const uint64_t hit = deterministic_transfer_latency(
            cfg.latency, cfg.scheme, World::REE, Direction::Read, true);
        const uint64_t miss = deterministic_transfer_latency(
            cfg.latency, cfg.scheme, World::REE, Direction::Read, false);
        cfg.attack.probe_threshold_cycles = (hit + miss) / 2;
    }

    if (root.has("atp")) {
        ObjectReader t(root.raw("atp"), "atp");
        cfg.atp.token_ttl = t.get<uint64_t>("token_ttl", 1000);
        cfg.atp.token_gated_trigger = t.get<bool>("token_gated_trigger", false);
        cfg.atp.attacker_has_token = t.get<bool>("attacker_has_token", false);
        t.finish();
    }

    cfg.trials = root.get<uint32_t>("trials", 20);
    cfg.seed = root.get<uint64_t>("seed", 1);
    root.finish();

    cfg.validate();
    return cfg;
}

void ScenarioConfig::validate() const {
    geometry.validate();
    policy.validate(geometry);
    latency.validate();
    try {
        layout.validate(geometry);
    } catch (const Error& e) {
        throw Error(Errc::Config, std::string("victim.table_bases: ") + e.what());
    }

    if (policy.kind == PartitionPolicy::Kind::SoftwareSetAllocation) {
        for (size_t t = 0; t < layout.table_bases.size(); ++t) {
            const uint64_t lines = layout.lines_per_table(geometry);
            for (uint64_t l = 0; l < lines; ++l) {
                const uint32_t set = set_index_of(
                    layout.table_bases[t] + l * geometry.line_size, geometry);
                if (!policy.set_allowed(World::TEE, set))
                    config_error("victim.table_bases",
                                 "table " + std::to_string(t) +
                                     " maps into a REE-allocated set");
            }
        }
    }

    if (attack.samples_per_byte == 0)
        config_error("attack.samples_per_byte", "must be >= 1");
    if (attack.noise_flip_probability < 0.0 || attack.noise_flip_probability > 1.0)
        config_error("attack.noise_flip_probability", "must lie in [0, 1]");
    if (latency.jitter_max == 0) {
        const uint64_t hit = deterministic_transfer_latency(latency, scheme, World::REE,
                                                            Direction::Read, true);
        const uint64_t miss = deterministic_transfer_latency(latency, scheme, World::REE,
                                                             Direction::Read, false);
        if (attack.probe_threshold_cycles <= hit || attack.probe_threshold_cycles >= miss)
            config_error("attack.probe_threshold_cycles",
                         "must lie strictly between the REE hit latency (" +
                             std::to_string(hit) + ") and miss latency (" +
                             std::to_string(miss) + ") when jitter_max is 0");
    }
    if (distinguisher_transfers != 0 && distinguisher_transfers < 4)
        config_error("attack.distinguisher_transfers", "must be 0 or >= 4");
    if (atp.token_ttl == 0)
        config_error("atp.token_ttl", "must be > 0");
}

ordered_json ScenarioConfig::to_canonical_json() const {
    ordered_json doc;
    doc["geometry"] = {{"num_sets", geometry.num_sets},
                       {"associativity", geometry.associativity},
                       {"line_size", geometry.line_size}};
    ordered_json pol;
    pol["kind"] = to_string(policy.kind);
    if (policy.kind == PartitionPolicy::Kind::HardwareWaySplit)
        pol["tee_ways"] = policy.tee_ways;
    if (policy.kind == PartitionPolicy::Kind::SoftwareSetAllocation) {
        pol["tee_set_begin"] = policy.tee_set_begin;
        pol["tee_set_end"] = policy.tee_set_end;
    }
    doc["policy"] = pol;
    doc["latency"] = {{"dram_cycles", latency.dram_cycles},
                      {"cache_hit_cycles", latency.cache_hit_cycles},
                      {"aes_decrypt_cycles", latency.aes_decrypt_cycles},
                      {"aes_encrypt_cycles", latency.aes_encrypt_cycles},
                      {"cta_delay_cycles", latency.cta_delay_cycles},
                      {"parallel_units", latency.parallel_units},
                      {"jitter_max", latency.jitter_max}};
    doc["path_scheme"] = to_string(scheme);
    doc["victim"] = {{"table_bases", layout.table_bases},
                     {"entry_size", layout.entry_size},
                     {"num_tables", layout.table_bases.size()},
                     {"key", fixed_key ? key_to_hex(*fixed_key) : "random"},
                     {"decoy_accesses", victim_options.decoy_accesses}};
    doc["attack"] = {{"samples_per_byte", attack.samples_per_byte},
                     {"probe_threshold_cycles", attack.probe_threshold_cycles},
                     {"noise_flip_probability", attack.noise_flip_probability},
                     {"permissive_probe", attack.permissive_probe},
                     {"distinguisher_transfers", distinguisher_transfers}};
    doc["atp"] = {{"token_ttl", atp.token_ttl},
                  {"token_gated_trigger", atp.token_gated_trigger},
                  {"attacker_has_token", atp.attacker_has_token}};
    doc["trials"] = trials;
    doc["seed"] = seed;
    return doc;
}

std::string config_digest(const ScenarioConfig& config) {
    const std::string text = config.to_canonical_json().dump();
    uint64_t hash = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 0x100000001b3ull;
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "fnv1a64:%016" PRIx64, hash);
    return buf;
}

} // namespace truspy
