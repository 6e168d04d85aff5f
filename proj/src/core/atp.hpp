#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "core/rng.hpp"

namespace truspy {

enum class Role : uint8_t { APP, TA, ATP };

const char* to_string(Role role);

struct SubjectIdentity {
    std::string id;
    Role role = Role::APP;
    std::vector<uint8_t> credential; // APP authentication secret
};

struct Token {
    std::array<uint8_t, 16> nonce{}; // nonzero, drawn from the seeded generator
    std::string subject_id;
    uint64_t issued_at = 0;  // logical ticks
    uint64_t expires_at = 0; // strictly greater than issued_at
};

struct Session {
    std::string subject_id;
    bool authenticated = false;
};

/// Token-masked data as presented by an APP (Clark-Wilson UDI).
struct UnconstrainedItem {
    std::vector<uint8_t> payload; // tp_mask(original, token), length >= 1
    Token token_ref;
};

enum class WriterRole : uint8_t { AppViaAtp, Ta };

/// Unmasked data at rest in the secure region (Clark-Wilson CDI). Only the
/// ATP write path and the TA direct path construct these.
struct ConstrainedItem {
    std::vector<uint8_t> payload;
    WriterRole writer_role = WriterRole::AppViaAtp;
};

enum class StoreRegion : uint8_t { Data, Token };

enum class IvpOutcome : uint8_t { Pass, NoToken, Mismatch, Expired };

const char* to_string(IvpOutcome outcome);

enum class AccessOp : uint8_t { DataRead, DataWrite, TokenRead, TokenWrite };

struct AccessLogEntry {
    uint64_t clock;
    std::string subject_id;
    Role role;
    AccessOp op;
    uint64_t address; // 0 for token-region entries
    bool allowed;     // true only when bytes actually moved
};

/// The shared secure memory: a data region of address-keyed byte blobs, a
/// token region keyed by subject id, and a logical clock the harness
/// advances. Every touch and every denial is recorded in the access log.
/// The token region is only ever read through the ATP/TA code paths below.
class SecureStore {
public:
    static constexpr uint64_t kDefaultRegionBase = 0x1000;
    static constexpr uint64_t kDefaultRegionSize = 1ull << 20;

    SecureStore(uint64_t region_base = kDefaultRegionBase,
                uint64_t region_size = kDefaultRegionSize);

    uint64_t clock() const { return clock_; }
    void advance_clock(uint64_t ticks) { clock_ += ticks; }

    uint64_t region_base() const { return region_base_; }
    uint64_t region_size() const { return region_size_; }
    bool in_secure_region(uint64_t address) const {
        return address >= region_base_ && address < region_base_ + region_size_;
    }

    void store_token(const Token& token); // replaces any prior token
    const Token* find_token(std::string_view subject_id) const;

    void put_data(uint64_t address, ConstrainedItem item,
                  const SubjectIdentity& writer);
    const ConstrainedItem* get_data(uint64_t address, const SubjectIdentity& reader);
    void log_denied(const SubjectIdentity& subject, AccessOp op, uint64_t address);

    const std::map<uint64_t, ConstrainedItem>& data_region() const { return data_; }
    const std::vector<AccessLogEntry>& access_log() const { return log_; }
    void clear_access_log() { log_.clear(); }

    /// One line per stored item: "0x<16-digit address>: <hex bytes>",
    /// ascending by address.
    std::string hex_dump() const;
    static std::map<uint64_t, std::vector<uint8_t>> parse_hex_dump(std::string_view text);

private:
    uint64_t region_base_;
    uint64_t region_size_;
    uint64_t clock_ = 0;
    std::map<uint64_t, ConstrainedItem> data_;
    std::map<std::string, Token, std::less<>> tokens_;
    std::vector<AccessLogEntry> log_;
};

/// Certified (subject role, operation, store region) relations, each with the
/// identities that certified it. A certifier of an entry is never accepted as
/// its executor.
class TripleRegistry {
public:
    struct Entry {
        Role role;
        std::string operation;
        StoreRegion region;
        std::vector<std::string> certifier_ids;
    };

    enum class Decision : uint8_t { Allowed, NoTriple, CertifierConflict };

    void add(Role role, std::string operation, StoreRegion region,
             std::vector<std::string> certifier_ids);
    Decision check(const SubjectIdentity& subject, std::string_view operation,
                   StoreRegion region) const;
    const std::vector<Entry>& entries() const { return entries_; }

    /// APP read/write on the data region, certified by the ATP identity.
    static TripleRegistry default_registry(const std::string& atp_id = "atp");

private:
    std::vector<Entry> entries_;
};

/// Constant-time byte comparison (length mismatch still scans).
bool constant_time_equal(std::span<const uint8_t> a, std::span<const uint8_t> b);

/// APP authentication. TA and ATP identities need no authentication and are
/// rejected with RoleError; a wrong credential raises AuthFailure.
Session authenticate_subject(const SubjectIdentity& subject,
                             std::span<const uint8_t> presented_credential);

/// Mints a token via the TA path, stores it in the token region (replacing
/// any prior token for the subject) and returns the APP's copy.
Token issue_token(const Session& session, SecureStore& store, uint64_t ttl, Rng& rng);

/// The transformation procedure: XOR with the cyclically repeated nonce.
/// Involution: tp_mask(tp_mask(d, t), t) == d.
std::vector<uint8_t> tp_mask(std::span<const uint8_t> data, const Token& token);

/// The integrity verification procedure: stored token exists, nonces match
/// (constant time), and the stored expiry is still in the future.
IvpOutcome ivp_verify(const Token& presented, const SecureStore& store);

/// APP-via-ATP write: triple check, IVP, then the second XOR with the stored
/// token turns the UDI into the CDI at `address`. Round trip: the stored
/// bytes equal the original data whenever presented token == stored token.
void write_secure(const SubjectIdentity& subject, const Token& token,
                  const UnconstrainedItem& udi, uint64_t address,
                  SecureStore& store, const TripleRegistry& registry);

/// APP-via-ATP read: triple check, IVP, then returns the stored bytes masked
/// with the stored token; the APP unmasks with its own token copy.
std::vector<uint8_t> read_secure(const SubjectIdentity& subject, const Token& token,
                                 uint64_t address, SecureStore& store,
                                 const TripleRegistry& registry);

/// The TA path: direct, token-free CDI access. Pass data to write; omit it
/// to read. Non-TA callers get RoleError.
std::optional<std::vector<uint8_t>>
ta_direct_access(const SubjectIdentity& subject, uint64_t address, SecureStore& store,
                 const std::optional<std::vector<uint8_t>>& data = std::nullopt);

/// Scenario-facing bundle: one store, one registry, the built-in TA and ATP
/// identities, and registered APP subjects with their sessions and held
/// token copies. Serializes all operations through the single store.
class AtpSystem {
public:
    explicit AtpSystem(uint64_t seed,
                       uint64_t region_base = SecureStore::kDefaultRegionBase,
                       uint64_t region_size = SecureStore::kDefaultRegionSize);

    void register_app(const std::string& id, std::vector<uint8_t> credential);
    void authenticate(const std::string& id, std::span<const uint8_t> credential);
    Token issue_app_token(const std::string& id, uint64_t ttl);
    bool app_token_valid(const std::string& id) const;

    void app_write(const std::string& id, uint64_t address,
                   std::span<const uint8_t> data);
    std::vector<uint8_t> app_read(const std::string& id, uint64_t address);
    void ta_write(uint64_t address, std::span<const uint8_t> data);
    std::vector<uint8_t> ta_read(uint64_t address);
    void advance_clock(uint64_t ticks) { store_.advance_clock(ticks); }

    SecureStore& store() { return store_; }
    const SecureStore& store() const { return store_; }
    TripleRegistry& registry() { return registry_; }
    const SubjectIdentity& ta_subject() const { return ta_; }

private:
    const SubjectIdentity& require_app(const std::string& id) const;

    SecureStore store_;
    TripleRegistry registry_;
    Rng rng_;
    SubjectIdentity ta_{"ta", Role::TA, {}};
    SubjectIdentity atp_{"atp", Role::ATP, {}};
    std::map<std::string, SubjectIdentity> apps_;
    std::map<std::string, Session> sessions_;
    std::map<std::string, Token> held_tokens_; // the APP-side copies
};

} // namespace truspy
