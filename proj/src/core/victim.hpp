#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "core/cache.hpp"
#include "core/rng.hpp"

namespace truspy {

using VictimKey = std::array<uint8_t, 16>;
using Plaintext = std::array<uint8_t, 16>;

/// Lookup-table layout of the TEE victim. Tables are line-aligned and hold
/// 256 entries each; key byte i indexes table (i mod table count).
struct TableLayout {
    static constexpr uint32_t kEntriesPerTable = 256;

    std::vector<uint64_t> table_bases; // byte addresses, line-aligned
    uint32_t entry_size = 4;           // bytes, power of two

    void validate(const CacheGeometry& geometry) const; // throws Errc::LayoutError

    uint32_t entries_per_line(const CacheGeometry& geometry) const {
        return geometry.line_size / entry_size;
    }
    uint64_t table_span_bytes() const {
        return uint64_t(kEntriesPerTable) * entry_size;
    }
    uint64_t lines_per_table(const CacheGeometry& geometry) const;
    uint64_t entry_address(uint32_t table, uint8_t index) const {
        return table_bases[table] + uint64_t(index) * entry_size;
    }
};

struct VictimTrace {
    std::vector<uint64_t> addresses; // all world TEE, all inside declared tables
};

struct VictimOptions {
    uint32_t decoy_accesses = 0; // extra random table-external TEE accesses
};

/// One first-round table-lookup pass: for each byte i, accesses the entry at
/// index plaintext[i] XOR key[i] in table (i mod tables) as world TEE. The
/// run is atomic; no attacker access interleaves. Decoy accesses, when
/// configured, perturb the cache but are not part of the trace.
/// Throws Errc::LayoutError when a table set falls outside the TEE range.
VictimTrace trigger_victim(const VictimKey& key, const TableLayout& layout,
                           const Plaintext& plaintext, Cache& cache,
                           const VictimOptions& options, Rng& rng);

/// Key-byte bits observable at line granularity: 8 - log2(entries per line),
/// clamped at zero when a whole table fits in one line.
uint32_t recoverable_bits(const TableLayout& layout, const CacheGeometry& geometry);

VictimKey key_from_hex(std::string_view hex); // throws Errc::Config
std::string key_to_hex(const VictimKey& key);

} // namespace truspy
