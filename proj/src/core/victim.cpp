#include "core/victim.hpp"

#include <bit>

#include "core/errors.hpp"

namespace truspy {

namespace {

// Decoy address space: above both worlds' prime/probe bases, so decoys can
// never alias a table line or a primed line.
constexpr uint64_t kDecoyBase = 1ull << 42;

} // namespace

uint64_t TableLayout::lines_per_table(const CacheGeometry& geometry) const {
    const uint64_t span = table_span_bytes();
    return (span + geometry.line_size - 1) / geometry.line_size;
}

void TableLayout::validate(const CacheGeometry& geometry) const {
    if (table_bases.empty())
        throw Error(Errc::LayoutError, "layout declares no tables");
    if (entry_size == 0 || (entry_size & (entry_size - 1)) != 0)
        throw Error(Errc::LayoutError, "layout.entry_size must be a power of two");
    if (entry_size > geometry.line_size)
        throw Error(Errc::LayoutError,
                    "layout.entry_size must not exceed the cache line size");
    for (uint64_t base : table_bases) {
        if (base % geometry.line_size != 0)
            throw Error(Errc::LayoutError, "table base not line-aligned");
        if (base + table_span_bytes() > (1ull << 40))
            throw Error(Errc::LayoutError, "table extends beyond the modeled DRAM range");
    }
}

VictimTrace trigger_victim(const VictimKey& key, const TableLayout& layout,
                           const Plaintext& plaintext, Cache& cache,
                           const VictimOptions& options, Rng& rng) {
    const CacheGeometry& geometry = cache.geometry();
    layout.validate(geometry);

    // All table lines must be TEE-reachable before anything is touched.
    for (size_t t = 0; t < layout.table_bases.size(); ++t) {
        const uint64_t lines = layout.lines_per_table(geometry);
        for (uint64_t l = 0; l < lines; ++l) {
            const uint32_t set = set_index_of(
                layout.table_bases[t] + l * geometry.line_size, geometry);
            if (!cache.policy().set_allowed(World::TEE, set))
                throw Error(Errc::LayoutError,
                            "table " + std::to_string(t) +
                                " overlaps a REE-allocated set region");
        }
    }

    VictimTrace trace;
    trace.addresses.reserve(key.size());
    const uint32_t num_tables = static_cast<uint32_t>(layout.table_bases.size());
    for (size_t i = 0; i < key.size(); ++i) {
        const uint8_t index = plaintext[i] ^ key[i];
        const uint64_t address = layout.entry_address(i % num_tables, index);
        cache.access(World::TEE, address);
        trace.addresses.push_back(address);
    }

    for (uint32_t d = 0; d < options.decoy_accesses; ++d) {
        uint32_t set;
        const PartitionPolicy& policy = cache.policy();
        if (policy.kind == PartitionPolicy::Kind::SoftwareSetAllocation) {
            set = policy.tee_set_begin +
                  static_cast<uint32_t>(rng.below(policy.tee_set_end - policy.tee_set_begin));
        } else {
            set = static_cast<uint32_t>(rng.below(geometry.num_sets));
        }
        const uint64_t salt = rng.below(1ull << 20);
        const uint64_t address =
            kDecoyBase + (salt * geometry.num_sets + set) * geometry.line_size;
        cache.access(World::TEE, address);
    }
    return trace;
}

uint32_t recoverable_bits(const TableLayout& layout, const CacheGeometry& geometry) {
    layout.validate(geometry);
    const uint32_t epl = layout.entries_per_line(geometry);
    const uint32_t low_bits = std::bit_width(epl) - 1; // epl is a power of two
    return low_bits >= 8 ? 0 : 8 - low_bits;
}

VictimKey key_from_hex(std::string_view hex) {
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        return -1;
    };
    VictimKey key{};
    if (hex.size() != 32)
        throw Error(Errc::Config, "victim key must be exactly 32 hex digits");
    for (size_t i = 0; i < key.size(); ++i) {
        const int hi = nibble(hex[2 * i]);
        const int lo = nibble(hex[2 * i + 1]);
        if (hi < 0 || lo < 0)
            throw Error(Errc::Config, "victim key contains a non-hex digit");
        key[i] = static_cast<uint8_t>(hi << 4 | lo);
    }
    return key;
}

std::string key_to_hex(const VictimKey& key) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(32);
    for (uint8_t b : key) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xf]);
    }
    return out;
}

} // namespace truspy
