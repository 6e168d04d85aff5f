#include <truspy/truspy.h>

#include <cstring>
#include <new>
#include <string>

#include "core/atp.hpp"
#include "core/errors.hpp"
#include "core/harness.hpp"

using namespace truspy;

namespace {

thread_local std::string tl_last_error;

truspy_status map_errc(Errc code) {
    switch (code) {
    case Errc::InvalidArgument: return TRUSPY_ERR_INVALID_ARG;
    case Errc::Config: return TRUSPY_ERR_CONFIG;
    case Errc::PolicyViolation: return TRUSPY_ERR_POLICY_VIOLATION;
    case Errc::LayoutError: return TRUSPY_ERR_LAYOUT;
    case Errc::AuthFailure: return TRUSPY_ERR_AUTH;
    case Errc::RoleError: return TRUSPY_ERR_ROLE;
    case Errc::NotAuthenticated: return TRUSPY_ERR_NOT_AUTHENTICATED;
    case Errc::TripleDenied: return TRUSPY_ERR_TRIPLE_DENIED;
    case Errc::TokenInvalid: return TRUSPY_ERR_TOKEN_INVALID;
    case Errc::NotFound: return TRUSPY_ERR_NOT_FOUND;
    case Errc::EmptyData: return TRUSPY_ERR_EMPTY_DATA;
    case Errc::InsufficientData: return TRUSPY_ERR_INSUFFICIENT_DATA;
    case Errc::UnknownParameter: return TRUSPY_ERR_UNKNOWN_PARAMETER;
    case Errc::IoError: return TRUSPY_ERR_IO;
    }
    return TRUSPY_ERR_INTERNAL;
}

truspy_status fail(truspy_status status, const char* message) {
    tl_last_error = message;
    return status;
}

/// Runs `fn`, translating exceptions into status codes.
template <typename Fn>
truspy_status guarded(Fn&& fn) {
    try {
        fn();
        return TRUSPY_OK;
    } catch (const Error& e) {
        tl_last_error = e.what();
        return map_errc(e.code());
    } catch (const std::exception& e) {
        tl_last_error = e.what();
        return TRUSPY_ERR_INTERNAL;
    } catch (...) {
        tl_last_error = "unknown error";
        return TRUSPY_ERR_INTERNAL;
    }
}

char* copy_string(const std::string& s) {
    char* out = new char[s.size() + 1];
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

uint8_t* copy_bytes(const std::vector<uint8_t>& v) {
    uint8_t* out = new uint8_t[v.empty() ? 1 : v.size()];
    if (!v.empty())
        std::memcpy(out, v.data(), v.size());
    return out;
}

World to_world(truspy_world w) {
    return w == TRUSPY_WORLD_TEE ? World::TEE : World::REE;
}

LatencyParameters to_params(const truspy_latency_params& p) {
    LatencyParameters out;
    out.dram_cycles = p.dram_cycles;
    out.cache_hit_cycles = p.cache_hit_cycles;
    out.aes_decrypt_cycles = p.aes_decrypt_cycles;
    out.aes_encrypt_cycles = p.aes_encrypt_cycles;
    out.cta_delay_cycles = p.cta_delay_cycles;
    out.parallel_units = p.parallel_units;
    out.jitter_max = p.jitter_max;
    return out;
}

PathScheme to_scheme(truspy_path_scheme s) {
    switch (s) {
    case TRUSPY_SCHEME_CTA_DELAY: return PathScheme::CtaDelay;
    case TRUSPY_SCHEME_PARALLEL_CRYPTO: return PathScheme::ParallelCrypto;
    default: return PathScheme::Baseline;
    }
}

} // namespace

struct truspy_cache {
    Cache impl;
};

struct truspy_atp {
    AtpSystem impl;
};

extern "C" {

const char* truspy_version(void) { return "1.0.0"; }

const char* truspy_last_error(void) { return tl_last_error.c_str(); }

void truspy_string_free(char* s) { delete[] s; }

void truspy_bytes_free(uint8_t* p) { delete[] p; }

truspy_status truspy_cache_create(uint32_t num_sets, uint32_t associativity,
                                  uint32_t line_size, truspy_policy_kind kind,
                                  uint32_t policy_arg0, uint32_t policy_arg1,
                                  truspy_cache** out_cache) {
    if (!out_cache)
        return fail(TRUSPY_ERR_NULL_ARG, "out_cache is NULL");
    *out_cache = nullptr;
    return guarded([&] {
        CacheGeometry geometry{num_sets, associativity, line_size};
        PartitionPolicy policy;
        switch (kind) {
        case TRUSPY_POLICY_SHARED:
            policy = PartitionPolicy::shared();
            break;
        case TRUSPY_POLICY_HARDWARE_WAY_SPLIT:
            policy = PartitionPolicy::hardware_way_split(policy_arg0);
            break;
        case TRUSPY_POLICY_SOFTWARE_SET_ALLOCATION:
            policy = PartitionPolicy::software_set_allocation(policy_arg0, policy_arg1);
            break;
        default:
            throw Error(Errc::InvalidArgument, "unknown policy kind");
        }
        *out_cache = new truspy_cache{Cache(geometry, policy)};
    });
}

void truspy_cache_destroy(truspy_cache* cache) { delete cache; }

truspy_status truspy_cache_access(truspy_cache* cache, truspy_world world,
                                  uint64_t address, truspy_outcome* out_outcome,
                                  truspy_world* out_evicted_world) {
    if (!cache)
        return fail(TRUSPY_ERR_NULL_ARG, "cache is NULL");
    return guarded([&] {
        const AccessRecord rec = cache->impl.access(to_world(world), address);
        if (out_outcome)
            *out_outcome = static_cast<truspy_outcome>(rec.outcome);
        if (out_evicted_world)
            *out_evicted_world = rec.evicted_world == World::TEE ? TRUSPY_WORLD_TEE
                                                                 : TRUSPY_WORLD_REE;
    });
}

truspy_status truspy_cache_prime(truspy_cache* cache, truspy_world world,
                                 const uint32_t* sets, size_t num_sets,
                                 uint64_t* out_filled) {
    if (!cache)
        return fail(TRUSPY_ERR_NULL_ARG, "cache is NULL");
    if (!sets && num_sets > 0)
        return fail(TRUSPY_ERR_NULL_ARG, "sets is NULL");
    return guarded([&] {
        const uint64_t filled = cache->impl.prime_world_lines(
            to_world(world), std::span<const uint32_t>(sets, num_sets));
        if (out_filled)
            *out_filled = filled;
    });
}

truspy_status truspy_cache_line_state(const truspy_cache* cache, uint32_t set,
                                      uint32_t way, int* out_valid,
                                      truspy_world* out_world) {
    if (!cache)
        return fail(TRUSPY_ERR_NULL_ARG, "cache is NULL");
    const CacheGeometry& g = cache->impl.geometry();
    if (set >= g.num_sets || way >= g.associativity)
        return fail(TRUSPY_ERR_INVALID_ARG, "set or way out of range");
    return guarded([&] {
        const OccupancyMap map = cache->impl.occupancy_snapshot();
        const LineSnapshot& line = map.at(set, way);
        if (out_valid)
            *out_valid = line.valid ? 1 : 0;
        if (out_world)
            *out_world = line.world == World::TEE ? TRUSPY_WORLD_TEE : TRUSPY_WORLD_REE;
    });
}

truspy_status truspy_cache_cross_world_evictions(const truspy_cache* cache,
                                                 uint64_t* out_count) {
    if (!cache || !out_count)
        return fail(TRUSPY_ERR_NULL_ARG, "cache or out_count is NULL");
    *out_count = cache->impl.cross_world_evictions();
    return TRUSPY_OK;
}

truspy_status truspy_set_index_of(uint64_t address, uint32_t num_sets,
                                  uint32_t line_size, uint32_t* out_set) {
    if (!out_set)
        return fail(TRUSPY_ERR_NULL_ARG, "out_set is NULL");
    return guarded([&] {
        CacheGeometry geometry{num_sets, 1, line_size};
        geometry.validate();
        *out_set = set_index_of(address, geometry);
    });
}

truspy_status truspy_equalization_gap(const truspy_latency_params* params,
                                      truspy_path_scheme scheme,
                                      uint64_t* out_gap_cycles) {
    if (!params || !out_gap_cycles)
        return fail(TRUSPY_ERR_NULL_ARG, "params or out_gap_cycles is NULL");
    return guarded([&] {
        const LatencyParameters p = to_params(*params);
        p.validate();
        *out_gap_cycles = equalization_gap(p, to_scheme(scheme));
    });
}

truspy_status truspy_transfer_latency(const truspy_latency_params* params,
                                      truspy_path_scheme scheme, truspy_world world,
                                      int direction, int hit, uint64_t* out_cycles) {
    if (!params || !out_cycles)
        return fail(TRUSPY_ERR_NULL_ARG, "params or out_cycles is NULL");
    return guarded([&] {
        const LatencyParameters p = to_params(*params);
        p.validate();
        *out_cycles = deterministic_transfer_latency(
            p, to_scheme(scheme), to_world(world),
            direction == 0 ? Direction::Read : Direction::Write, hit != 0);
    });
}

truspy_status truspy_atp_create(uint64_t seed, truspy_atp** out_atp) {
    if (!out_atp)
        return fail(TRUSPY_ERR_NULL_ARG, "out_atp is NULL");
    *out_atp = nullptr;
    return guarded([&] { *out_atp = new truspy_atp{AtpSystem(seed)}; });
}

void truspy_atp_destroy(truspy_atp* atp) { delete atp; }

truspy_status truspy_atp_register_app(truspy_atp* atp, const char* app_id,
                                      const uint8_t* credential, size_t credential_len) {
    if (!atp || !app_id)
        return fail(TRUSPY_ERR_NULL_ARG, "atp or app_id is NULL");
    if (!credential && credential_len > 0)
        return fail(TRUSPY_ERR_NULL_ARG, "credential is NULL");
    return guarded([&] {
        atp->impl.register_app(app_id,
                               std::vector<uint8_t>(credential, credential + credential_len));
    });
}

truspy_status truspy_atp_authenticate(truspy_atp* atp, const char* app_id,
                                      const uint8_t* credential, size_t credential_len) {
    if (!atp || !app_id)
        return fail(TRUSPY_ERR_NULL_ARG, "atp or app_id is NULL");
    if (!credential && credential_len > 0)
        return fail(TRUSPY_ERR_NULL_ARG, "credential is NULL");
    return guarded([&] {
        atp->impl.authenticate(app_id,
                               std::span<const uint8_t>(credential, credential_len));
    });
}

truspy_status truspy_atp_issue_token(truspy_atp* atp, const char* app_id,
                                     uint64_t ttl_ticks) {
    if (!atp || !app_id)
        return fail(TRUSPY_ERR_NULL_ARG, "atp or app_id is NULL");
    return guarded([&] { atp->impl.issue_app_token(app_id, ttl_ticks); });
}

truspy_status truspy_atp_app_write(truspy_atp* atp, const char* app_id, uint64_t address,
                                   const uint8_t* data, size_t len) {
    if (!atp || !app_id || !data)
        return fail(TRUSPY_ERR_NULL_ARG, "atp, app_id, or data is NULL");
    return guarded([&] {
        atp->impl.app_write(app_id, address, std::span<const uint8_t>(data, len));
    });
}

truspy_status truspy_atp_app_read(truspy_atp* atp, const char* app_id, uint64_t address,
                                  uint8_t** out_data, size_t* out_len) {
    if (!atp || !app_id || !out_data || !out_len)
        return fail(TRUSPY_ERR_NULL_ARG, "atp, app_id, or out args are NULL");
    return guarded([&] {
        const std::vector<uint8_t> data = atp->impl.app_read(app_id, address);
        *out_data = copy_bytes(data);
        *out_len = data.size();
    });
}

truspy_status truspy_atp_ta_write(truspy_atp* atp, uint64_t address, const uint8_t* data,
                                  size_t len) {
    if (!atp || !data)
        return fail(TRUSPY_ERR_NULL_ARG, "atp or data is NULL");
    return guarded(
        [&] { atp->impl.ta_write(address, std::span<const uint8_t>(data, len)); });
}

truspy_status truspy_atp_ta_read(truspy_atp* atp, uint64_t address, uint8_t** out_data,
                                 size_t* out_len) {
    if (!atp || !out_data || !out_len)
        return fail(TRUSPY_ERR_NULL_ARG, "atp or out args are NULL");
    return guarded([&] {
        const std::vector<uint8_t> data = atp->impl.ta_read(address);
        *out_data = copy_bytes(data);
        *out_len = data.size();
    });
}

truspy_status truspy_atp_advance_clock(truspy_atp* atp, uint64_t ticks) {
    if (!atp)
        return fail(TRUSPY_ERR_NULL_ARG, "atp is NULL");
    atp->impl.advance_clock(ticks);
    return TRUSPY_OK;
}

truspy_status truspy_atp_hex_dump(const truspy_atp* atp, char** out_text) {
    if (!atp || !out_text)
        return fail(TRUSPY_ERR_NULL_ARG, "atp or out_text is NULL");
    return guarded([&] { *out_text = copy_string(atp->impl.store().hex_dump()); });
}

truspy_status truspy_run_config_json(const char* config_json, int has_seed_override,
                                     uint64_t seed_override, char** out_report_json) {
    if (!config_json || !out_report_json)
        return fail(TRUSPY_ERR_NULL_ARG, "config_json or out_report_json is NULL");
    return guarded([&] {
        ScenarioConfig config = ScenarioConfig::from_json_text(config_json);
        if (has_seed_override) {
            config.seed = seed_override;
            config.validate();
        }
        const TrialReport report = run_scenario(config);
        *out_report_json = copy_string(report_to_json(report).dump(2) + "\n");
    });
}

truspy_status truspy_sweep_config_json(const char* config_json, const char* param_path,
                                       const char* values_csv, char** out_reports_json) {
    if (!config_json || !param_path || !values_csv || !out_reports_json)
        return fail(TRUSPY_ERR_NULL_ARG, "a required argument is NULL");
    return guarded([&] {
        const ScenarioConfig config = ScenarioConfig::from_json_text(config_json);
        std::vector<std::string> values;
        const std::string csv = values_csv;
        size_t start = 0;
        while (start <= csv.size() && !csv.empty()) {
            const size_t comma = csv.find(',', start);
            if (comma == std::string::npos) {
                values.push_back(csv.substr(start));
                break;
            }
            values.push_back(csv.substr(start, comma - start));
            start = comma + 1;
        }
        const std::vector<TrialReport> reports = sweep(config, param_path, values);
        nlohmann::ordered_json doc = nlohmann::ordered_json::array();
        for (const TrialReport& r : reports)
            doc.push_back(report_to_json(r));
        *out_reports_json = copy_string(doc.dump(2) + "\n");
    });
}

truspy_status truspy_reports_to_csv(const char* reports_json, char** out_csv) {
    if (!reports_json || !out_csv)
        return fail(TRUSPY_ERR_NULL_ARG, "reports_json or out_csv is NULL");
    return guarded([&] {
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(reports_json);
        } catch (const nlohmann::json::exception& e) {
            throw Error(Errc::Config, std::string("invalid report JSON: ") + e.what());
        }
        *out_csv = copy_string(reports_to_csv(doc));
    });
}

} // extern "C"
