/* truspy: two-world (REE/TEE) cache side-channel simulator, C API.
 *
 * All functions returning truspy_status use TRUSPY_OK for success and a
 * negative code otherwise; truspy_last_error() describes the most recent
 * failure on the calling thread. Objects are opaque handles owned by the
 * caller and released with the matching *_destroy. Strings and byte buffers
 * returned through out-parameters are heap copies; free them with
 * truspy_string_free / truspy_bytes_free.
 */
#ifndef TRUSPY_H
#define TRUSPY_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define TRUSPY_API __declspec(dllexport)
#else
#define TRUSPY_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum truspy_status {
    TRUSPY_OK = 0,
    TRUSPY_ERR_NULL_ARG = -1,
    TRUSPY_ERR_INVALID_ARG = -2,
    TRUSPY_ERR_CONFIG = -3,
    TRUSPY_ERR_POLICY_VIOLATION = -4,
    TRUSPY_ERR_LAYOUT = -5,
    TRUSPY_ERR_AUTH = -6,
    TRUSPY_ERR_ROLE = -7,
    TRUSPY_ERR_NOT_AUTHENTICATED = -8,
    TRUSPY_ERR_TRIPLE_DENIED = -9,
    TRUSPY_ERR_TOKEN_INVALID = -10,
    TRUSPY_ERR_NOT_FOUND = -11,
    TRUSPY_ERR_EMPTY_DATA = -12,
    TRUSPY_ERR_INSUFFICIENT_DATA = -13,
    TRUSPY_ERR_UNKNOWN_PARAMETER = -14,
    TRUSPY_ERR_IO = -15,
    TRUSPY_ERR_INTERNAL = -16
} truspy_status;

typedef enum truspy_world { TRUSPY_WORLD_REE = 0, TRUSPY_WORLD_TEE = 1 } truspy_world;

typedef enum truspy_policy_kind {
    TRUSPY_POLICY_SHARED = 0,
    TRUSPY_POLICY_HARDWARE_WAY_SPLIT = 1,  /* arg0 = tee_ways */
    TRUSPY_POLICY_SOFTWARE_SET_ALLOCATION = 2 /* arg0 = tee_set_begin, arg1 = end */
} truspy_policy_kind;

typedef enum truspy_path_scheme {
    TRUSPY_SCHEME_BASELINE = 0,
    TRUSPY_SCHEME_CTA_DELAY = 1,
    TRUSPY_SCHEME_PARALLEL_CRYPTO = 2
} truspy_path_scheme;

typedef enum truspy_outcome {
    TRUSPY_OUTCOME_HIT = 0,
    TRUSPY_OUTCOME_MISS_NO_EVICT = 1,
    TRUSPY_OUTCOME_MISS_EVICT = 2
} truspy_outcome;

typedef struct truspy_latency_params {
    uint32_t dram_cycles;
    uint32_t cache_hit_cycles;
    uint32_t aes_decrypt_cycles;
    uint32_t aes_encrypt_cycles;
    uint32_t cta_delay_cycles;
    uint32_t parallel_units;
    uint32_t jitter_max;
} truspy_latency_params;

typedef struct truspy_cache truspy_cache;
typedef struct truspy_atp truspy_atp;

TRUSPY_API const char* truspy_version(void);
TRUSPY_API const char* truspy_last_error(void); /* thread-local, never NULL */
TRUSPY_API void truspy_string_free(char* s);
TRUSPY_API void truspy_bytes_free(uint8_t* p);

/* ---- cache model ---- */

TRUSPY_API truspy_status truspy_cache_create(uint32_t num_sets, uint32_t associativity,
                                             uint32_t line_size, truspy_policy_kind kind,
                                             uint32_t policy_arg0, uint32_t policy_arg1,
                                             truspy_cache** out_cache);
TRUSPY_API void truspy_cache_destroy(truspy_cache* cache);

TRUSPY_API truspy_status truspy_cache_access(truspy_cache* cache, truspy_world world,
                                             uint64_t address, truspy_outcome* out_outcome,
                                             truspy_world* out_evicted_world);

/* Fills every way `world` may occupy in the given sets; *out_filled gets the
 * number of lines written. */
TRUSPY_API truspy_status truspy_cache_prime(truspy_cache* cache, truspy_world world,
                                            const uint32_t* sets, size_t num_sets,
                                            uint64_t* out_filled);

TRUSPY_API truspy_status truspy_cache_line_state(const truspy_cache* cache, uint32_t set,
                                                 uint32_t way, int* out_valid,
                                                 truspy_world* out_world);

TRUSPY_API truspy_status truspy_cache_cross_world_evictions(const truspy_cache* cache,
                                                            uint64_t* out_count);

TRUSPY_API truspy_status truspy_set_index_of(uint64_t address, uint32_t num_sets,
                                             uint32_t line_size, uint32_t* out_set);

/* ---- data path ---- */

TRUSPY_API truspy_status truspy_equalization_gap(const truspy_latency_params* params,
                                                 truspy_path_scheme scheme,
                                                 uint64_t* out_gap_cycles);

/* Deterministic transfer latency (jitter excluded); direction 0 = read,
 * 1 = write; hit nonzero for a cache hit. */
TRUSPY_API truspy_status truspy_transfer_latency(const truspy_latency_params* params,
                                                 truspy_path_scheme scheme,
                                                 truspy_world world, int direction,
                                                 int hit, uint64_t* out_cycles);

/* ---- ATP / secure store ---- */

TRUSPY_API truspy_status truspy_atp_create(uint64_t seed, truspy_atp** out_atp);
TRUSPY_API void truspy_atp_destroy(truspy_atp* atp);

TRUSPY_API truspy_status truspy_atp_register_app(truspy_atp* atp, const char* app_id,
                                                 const uint8_t* credential,
                                                 size_t credential_len);
TRUSPY_API truspy_status truspy_atp_authenticate(truspy_atp* atp, const char* app_id,
                                                 const uint8_t* credential,
                                                 size_t credential_len);
TRUSPY_API truspy_status truspy_atp_issue_token(truspy_atp* atp, const char* app_id,
                                                uint64_t ttl_ticks);

/* Token-mediated APP access; reads return the unmasked plaintext. */
TRUSPY_API truspy_status truspy_atp_app_write(truspy_atp* atp, const char* app_id,
                                              uint64_t address, const uint8_t* data,
                                              size_t len);
TRUSPY_API truspy_status truspy_atp_app_read(truspy_atp* atp, const char* app_id,
                                             uint64_t address, uint8_t** out_data,
                                             size_t* out_len);

/* Token-free TA access. */
TRUSPY_API truspy_status truspy_atp_ta_write(truspy_atp* atp, uint64_t address,
                                             const uint8_t* data, size_t len);
TRUSPY_API truspy_status truspy_atp_ta_read(truspy_atp* atp, uint64_t address,
                                            uint8_t** out_data, size_t* out_len);

TRUSPY_API truspy_status truspy_atp_advance_clock(truspy_atp* atp, uint64_t ticks);

/* "0x<address>: <hex bytes>" per stored item, ascending. */
TRUSPY_API truspy_status truspy_atp_hex_dump(const truspy_atp* atp, char** out_text);

/* ---- experiment harness ---- */

/* Runs a scenario described by a JSON config document and returns the report
 * as JSON text. When has_seed_override is nonzero, seed_override replaces the
 * config's seed. */
TRUSPY_API truspy_status truspy_run_config_json(const char* config_json,
                                                int has_seed_override,
                                                uint64_t seed_override,
                                                char** out_report_json);

/* Sweeps one config parameter (dotted path) across comma-separated values and
 * returns a JSON array of reports. */
TRUSPY_API truspy_status truspy_sweep_config_json(const char* config_json,
                                                  const char* param_path,
                                                  const char* values_csv,
                                                  char** out_reports_json);

/* Converts a report document (object or array) to CSV. */
TRUSPY_API truspy_status truspy_reports_to_csv(const char* reports_json, char** out_csv);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* TRUSPY_H */
