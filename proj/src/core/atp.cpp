#include "core/atp.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "core/errors.hpp"

namespace truspy {

const char* to_string(Role role) {
    switch (role) {
    case Role::APP: return "APP";
    case Role::TA: return "TA";
    case Role::ATP: return "ATP";
    }
    return "?";
}

const char* to_string(IvpOutcome outcome) {
    switch (outcome) {
    case IvpOutcome::Pass: return "Pass";
    case IvpOutcome::NoToken: return "NoToken";
    case IvpOutcome::Mismatch: return "Mismatch";
    case IvpOutcome::Expired: return "Expired";
    }
    return "?";
}

SecureStore::SecureStore(uint64_t region_base, uint64_t region_size)
    : region_base_(region_base), region_size_(region_size) {}

void SecureStore::store_token(const Token& token) {
    log_.push_back({clock_, token.subject_id, Role::ATP, AccessOp::TokenWrite, 0, true});
    tokens_.insert_or_assign(token.subject_id, token);
}

const Token* SecureStore::find_token(std::string_view subject_id) const {
    auto it = tokens_.find(subject_id);
    return it == tokens_.end() ? nullptr : &it->second;
}

void SecureStore::put_data(uint64_t address, ConstrainedItem item,
                           const SubjectIdentity& writer) {
    log_.push_back({clock_, writer.id, writer.role, AccessOp::DataWrite, address, true});
    data_.insert_or_assign(address, std::move(item));
}

const ConstrainedItem* SecureStore::get_data(uint64_t address,
                                             const SubjectIdentity& reader) {
    auto it = data_.find(address);
    const bool found = it != data_.end();
    log_.push_back({clock_, reader.id, reader.role, AccessOp::DataRead, address, found});
    return found ? &it->second : nullptr;
}

void SecureStore::log_denied(const SubjectIdentity& subject, AccessOp op,
                             uint64_t address) {
    log_.push_back({clock_, subject.id, subject.role, op, address, false});
}

std::string SecureStore::hex_dump() const {
    static const char* digits = "0123456789abcdef";
    std::string out;
    for (const auto& [address, item] : data_) {
        char head[24];
        std::snprintf(head, sizeof(head), "0x%016llx:",
                      static_cast<unsigned long long>(address));
        out += head;
        for (uint8_t b : item.payload) {
            out.push_back(' ');
            out.push_back(digits[b >> 4]);
            out.push_back(digits[b & 0xf]);
        }
        out.push_back('\n');
    }
    return out;
}

std::map<uint64_t, std::vector<uint8_t>> SecureStore::parse_hex_dump(std::string_view text) {
    std::map<uint64_t, std::vector<uint8_t>> result;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        const size_t colon = line.find(':');
        if (colon == std::string::npos)
            throw Error(Errc::Config, "hex dump line missing ':'");
        const uint64_t address = std::stoull(line.substr(0, colon), nullptr, 16);
        std::vector<uint8_t> bytes;
        std::istringstream rest(line.substr(colon + 1));
        std::string tok;
        while (rest >> tok)
            bytes.push_back(static_cast<uint8_t>(std::stoul(tok, nullptr, 16)));
        result.emplace(address, std::move(bytes));
    }
    return result;
}

void TripleRegistry::add(Role role, std::string operation, StoreRegion region,
                         std::vector<std::string> certifier_ids) {
    entries_.push_back({role, std::move(operation), region, std::move(certifier_ids)});
}

TripleRegistry::Decision TripleRegistry::check(const SubjectIdentity& subject,
                                               std::string_view operation,
                                               StoreRegion region) const {
    for (const Entry& e : entries_) {
        if (e.role != subject.role || e.operation != operation || e.region != region)
            continue;
        const bool is_certifier =
            std::find(e.certifier_ids.begin(), e.certifier_ids.end(), subject.id) !=
            e.certifier_ids.end();
        return is_certifier ? Decision::CertifierConflict : Decision::Allowed;
    }
    return Decision::NoTriple;
}

TripleRegistry TripleRegistry::default_registry(const std::string& atp_id) {
    TripleRegistry registry;
    registry.add(Role::APP, "read", StoreRegion::Data, {atp_id});
    registry.add(Role::APP, "write", StoreRegion::Data, {atp_id});
    return registry;
}

bool constant_time_equal(std::span<const uint8_t> a, std::span<const uint8_t> b) {
    uint8_t diff = a.size() == b.size() ? 0 : 1;
    const size_t n = std::min(a.size(), b.size());
    for (size_t i = 0; i < n; ++i)
        diff |= static_cast<uint8_t>(a[i] ^ b[i]);
    return diff == 0;
}

Session authenticate_subject(const SubjectIdentity& subject,
                             std::span<const uint8_t> presented_credential) {
    if (subject.role != Role::APP)
        throw Error(Errc::RoleError,
                    std::string(to_string(subject.role)) +
                        " subjects do not authenticate through the ATP");
    if (!constant_time_equal(subject.credential, presented_credential))
        throw Error(Errc::AuthFailure, "credential mismatch for subject " + subject.id);
    return Session{subject.id, true};
}

Token issue_token(const Session& session, SecureStore& store, uint64_t ttl, Rng& rng) {
    if (!session.authenticated)
        throw Error(Errc::NotAuthenticated,
                    "token issuance requires an authenticated session");
    if (ttl == 0)
        throw Error(Errc::InvalidArgument, "token ttl must be > 0");

    Token token;
    token.subject_id = session.subject_id;
    token.issued_at = store.clock();
    token.expires_at = store.clock() + ttl;
    do {
        for (uint8_t& b : token.nonce)
            b = rng.byte();
    } while (std::all_of(token.nonce.begin(), token.nonce.end(),
                         [](uint8_t b) { return b == 0; }));

    store.store_token(token);
    return token;
}

std::vector<uint8_t> tp_mask(std::span<const uint8_t> data, const Token& token) {
    if (data.empty())
        throw Error(Errc::EmptyData, "tp_mask requires non-empty data");
    std::vector<uint8_t> out(data.size());
    for (size_t i = 0; i < data.size(); ++i)
        out[i] = data[i] ^ token.nonce[i % token.nonce.size()];
    return out;
}

IvpOutcome ivp_verify(const Token& presented, const SecureStore& store) {
    const Token* stored = store.find_token(presented.subject_id);
    if (stored == nullptr)
        return IvpOutcome::NoToken;
    if (!constant_time_equal(presented.nonce, stored->nonce))
        return IvpOutcome::Mismatch;
    if (store.clock() >= stored->expires_at)
        return IvpOutcome::Expired;
    return IvpOutcome::Pass;
}

namespace {

void check_triple(const SubjectIdentity& subject, std::string_view operation,
                  uint64_t address, SecureStore& store, const TripleRegistry& registry,
                  AccessOp log_op) {
    switch (registry.check(subject, operation, StoreRegion::Data)) {
    case TripleRegistry::Decision::Allowed:
        return;
    case TripleRegistry::Decision::CertifierConflict:
        store.log_denied(subject, log_op, address);
        throw Error(Errc::TripleDenied,
                    "subject " + subject.id + " certified this triple and cannot execute it");
    case TripleRegistry::Decision::NoTriple:
        store.log_denied(subject, log_op, address);
        throw Error(Errc::TripleDenied,
                    "no certified triple for (" + std::string(to_string(subject.role)) +
                        ", " + std::string(operation) + ", data)");
    }
}

void check_ivp(const SubjectIdentity& subject, const Token& token, uint64_t address,
               SecureStore& store, AccessOp log_op) {
    const IvpOutcome outcome = ivp_verify(token, store);
    if (outcome != IvpOutcome::Pass) {
        store.log_denied(subject, log_op, address);
        throw Error(Errc::TokenInvalid, to_string(outcome));
    }
}

} // namespace

void write_secure(const SubjectIdentity& subject, const Token& token,
                  const UnconstrainedItem& udi, uint64_t address,
                  SecureStore& store, const TripleRegistry& registry) {
    if (!store.in_secure_region(address)) {
        store.log_denied(subject, AccessOp::DataWrite, address);
        throw Error(Errc::PolicyViolation, "write address outside the secure region");
    }
    check_triple(subject, "write", address, store, registry, AccessOp::DataWrite);
    check_ivp(subject, token, address, store, AccessOp::DataWrite);

    // Second XOR with the stored token; with matching tokens the two masks
    // cancel and the CDI holds the original data.
    const Token* stored = store.find_token(subject.id);
    store.put_data(address, {tp_mask(udi.payload, *stored), WriterRole::AppViaAtp},
                   subject);
}

std::vector<uint8_t> read_secure(const SubjectIdentity& subject, const Token& token,
                                 uint64_t address, SecureStore& store,
                                 const TripleRegistry& registry) {
    if (!store.in_secure_region(address)) {
        store.log_denied(subject, AccessOp::DataRead, address);
        throw Error(Errc::PolicyViolation, "read address outside the secure region");
    }
    check_triple(subject, "read", address, store, registry, AccessOp::DataRead);
    check_ivp(subject, token, address, store, AccessOp::DataRead);

    const ConstrainedItem* item = store.get_data(address, subject);
    if (item == nullptr)
        throw Error(Errc::NotFound,
                    "no constrained item at address " + std::to_string(address));
    const Token* stored = store.find_token(subject.id);
    return tp_mask(item->payload, *stored);
}

std::optional<std::vector<uint8_t>>
ta_direct_access(const SubjectIdentity& subject, uint64_t address, SecureStore& store,
                 const std::optional<std::vector<uint8_t>>& data) {
    if (subject.role != Role::TA)
        throw Error(Errc::RoleError, "direct secure-memory access is reserved for the TA");
    if (!store.in_secure_region(address)) {
        store.log_denied(subject, data ? AccessOp::DataWrite : AccessOp::DataRead,
                         address);
        throw Error(Errc::PolicyViolation, "address outside the secure region");
    }
    if (data) {
        store.put_data(address, {*data, WriterRole::Ta}, subject);
        return std::nullopt;
    }
    const ConstrainedItem* item = store.get_data(address, subject);
    if (item == nullptr)
        throw Error(Errc::NotFound,
                    "no constrained item at address " + std::to_string(address));
    return item->payload;
}

AtpSystem::AtpSystem(uint64_t seed, uint64_t region_base, uint64_t region_size)
    : store_(region_base, region_size),
      registry_(TripleRegistry::default_registry("atp")),
      rng_(seed) {}

void AtpSystem::register_app(const std::string& id, std::vector<uint8_t> credential) {
    apps_.insert_or_assign(id, SubjectIdentity{id, Role::APP, std::move(credential)});
}

const SubjectIdentity& AtpSystem::require_app(const std::string& id) const {
    auto it = apps_.find(id);
    if (it == apps_.end())
        throw Error(Errc::NotFound, "unknown APP subject " + id);
    return it->second;
}

void AtpSystem::authenticate(const std::string& id,
                             std::span<const uint8_t> credential) {
    sessions_.insert_or_assign(id, authenticate_subject(require_app(id), credential));
}

Token AtpSystem::issue_app_token(const std::string& id, uint64_t ttl) {
    auto it = sessions_.find(id);
    const Session session = it == sessions_.end() ? Session{id, false} : it->second;
    Token token = issue_token(session, store_, ttl, rng_);
    held_tokens_.insert_or_assign(id, token);
    return token;
}

bool AtpSystem::app_token_valid(const std::string& id) const {
    auto it = held_tokens_.find(id);
    if (it == held_tokens_.end())
        return false;
    return ivp_verify(it->second, store_) == IvpOutcome::Pass;
}

void AtpSystem::app_write(const std::string& id, uint64_t address,
                          std::span<const uint8_t> data) {
    const SubjectIdentity& subject = require_app(id);
    auto token_it = held_tokens_.find(id);
    const Token token = token_it == held_tokens_.end() ? Token{.subject_id = id}
                                                       : token_it->second;
    UnconstrainedItem udi{tp_mask(data, token), token};
    write_secure(subject, token, udi, address, store_, registry_);
}

std::vector<uint8_t> AtpSystem::app_read(const std::string& id, uint64_t address) {
    const SubjectIdentity& subject = require_app(id);
    auto token_it = held_tokens_.find(id);
    const Token token = token_it == held_tokens_.end() ? Token{.subject_id = id}
                                                       : token_it->second;
    return tp_mask(read_secure(subject, token, address, store_, registry_), token);
}

void AtpSystem::ta_write(uint64_t address, std::span<const uint8_t> data) {
    ta_direct_access(ta_, address, store_,
                     std::vector<uint8_t>(data.begin(), data.end()));
}

std::vector<uint8_t> AtpSystem::ta_read(uint64_t address) {
    return *ta_direct_access(ta_, address, store_);
}

} // namespace truspy
