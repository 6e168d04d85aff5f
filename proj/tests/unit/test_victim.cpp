#include <doctest.h>

#include <algorithm>
#include <set>

#include "core/errors.hpp"
#include "core/victim.hpp"

using namespace truspy;

namespace {

TableLayout one_table(uint32_t entry_size = 4, uint64_t base = 0) {
    TableLayout layout;
    layout.table_bases = {base};
    layout.entry_size = entry_size;
    return layout;
}

VictimTrace run(const VictimKey& key, const Plaintext& pt, const TableLayout& layout,
                Cache& cache) {
    Rng rng(0);
    return trigger_victim(key, layout, pt, cache, {}, rng);
}

} // namespace

TEST_CASE("zero key and plaintext touch the table base") {
    CacheGeometry g{256, 8, 64};
    Cache cache(g, PartitionPolicy::shared());
    const VictimTrace trace = run(VictimKey{}, Plaintext{}, one_table(), cache);
    REQUIRE(trace.addresses.size() == 16);
    CHECK(trace.addresses[0] == 0);
}

TEST_CASE("lookup index to line mapping") {
    // Oracle: enumerate the index -> line map for every byte value.
    CacheGeometry g{256, 8, 64};
    const TableLayout layout = one_table(4);
    const uint32_t epl = layout.entries_per_line(g);
    REQUIRE(epl == 16);

    for (uint32_t index = 0; index < 256; ++index) {
        Cache cache(g, PartitionPolicy::shared());
        VictimKey key{};
        Plaintext pt{};
        pt[0] = static_cast<uint8_t>(index);
        const VictimTrace trace = run(key, pt, layout, cache);
        const uint64_t line = trace.addresses[0] / g.line_size;
        CHECK(line == index / epl);
    }

    // Index 0x10 with 16 entries per line lands on line 1.
    Cache cache(g, PartitionPolicy::shared());
    Plaintext pt{};
    pt[0] = 0x10;
    const VictimTrace trace = run(VictimKey{}, pt, layout, cache);
    CHECK(trace.addresses[0] / g.line_size == 1);
}

TEST_CASE("XOR symmetry: swapping key and plaintext gives the same addresses") {
    CacheGeometry g{256, 8, 64};
    const TableLayout layout = one_table();
    VictimKey key;
    Plaintext pt;
    for (size_t i = 0; i < 16; ++i) {
        key[i] = static_cast<uint8_t>(31 * i + 7);
        pt[i] = static_cast<uint8_t>(201 - 13 * i);
    }
    Cache a(g, PartitionPolicy::shared());
    Cache b(g, PartitionPolicy::shared());
    VictimKey swapped_key;
    Plaintext swapped_pt;
    std::copy(pt.begin(), pt.end(), swapped_key.begin());
    std::copy(key.begin(), key.end(), swapped_pt.begin());
    CHECK(run(key, pt, layout, a).addresses == run(swapped_key, swapped_pt, layout, b).addresses);
}

TEST_CASE("trace length is exactly 16 and stays inside declared tables") {
    CacheGeometry g{256, 8, 64};
    TableLayout layout;
    layout.entry_size = 4;
    for (uint64_t t = 0; t < 4; ++t)
        layout.table_bases.push_back(t * 1024);

    Cache cache(g, PartitionPolicy::shared());
    Rng rng(5);
    VictimKey key;
    Plaintext pt;
    for (size_t i = 0; i < 16; ++i) {
        key[i] = rng.byte();
        pt[i] = rng.byte();
    }
    const VictimTrace trace = trigger_victim(key, layout, pt, cache, {}, rng);
    REQUIRE(trace.addresses.size() == 16);
    for (size_t i = 0; i < 16; ++i) {
        const uint64_t base = layout.table_bases[i % 4];
        CHECK(trace.addresses[i] >= base);
        CHECK(trace.addresses[i] < base + layout.table_span_bytes());
    }
}

TEST_CASE("key bits below line granularity never change the set trace") {
    CacheGeometry g{256, 8, 64};
    const TableLayout layout = one_table(4);
    const uint32_t epl = layout.entries_per_line(g);

    VictimKey base_key{};
    base_key[0] = 0x40;
    Plaintext pt{};
    pt[0] = 0x21;

    auto set_trace = [&](const VictimKey& key) {
        Cache cache(g, PartitionPolicy::shared());
        std::vector<uint32_t> sets;
        for (uint64_t addr : run(key, pt, layout, cache).addresses)
            sets.push_back(set_index_of(addr, g));
        return sets;
    };

    const auto reference = set_trace(base_key);
    for (uint32_t low = 0; low < epl; ++low) {
        VictimKey key = base_key;
        key[0] = static_cast<uint8_t>((base_key[0] & ~(epl - 1)) | low);
        CHECK(set_trace(key) == reference);
    }
}

TEST_CASE("victim mutates only TEE-eligible state under partitioning") {
    CacheGeometry g{256, 8, 64};

    SUBCASE("hardware way split") {
        Cache cache(g, PartitionPolicy::hardware_way_split(4));
        run(VictimKey{}, Plaintext{}, one_table(), cache);
        const OccupancyMap map = cache.occupancy_snapshot();
        for (uint32_t s = 0; s < g.num_sets; ++s)
            for (uint32_t w = 4; w < 8; ++w)
                CHECK_FALSE(map.at(s, w).valid); // REE ways untouched
        CHECK(cache.partition_invariant_holds());
    }

    SUBCASE("software allocation rejects tables in REE sets") {
        Cache cache(g, PartitionPolicy::software_set_allocation(128, 256));
        CHECK_THROWS_AS(run(VictimKey{}, Plaintext{}, one_table(4, 0), cache), Error);
        try {
            run(VictimKey{}, Plaintext{}, one_table(4, 0), cache);
        } catch (const Error& e) {
            CHECK(e.code() == Errc::LayoutError);
        }
    }

    SUBCASE("software allocation accepts TEE-resident tables") {
        Cache cache(g, PartitionPolicy::software_set_allocation(128, 256));
        const uint64_t base = 128 * 64;
        CHECK_NOTHROW(run(VictimKey{}, Plaintext{}, one_table(4, base), cache));
    }
}

TEST_CASE("decoy accesses only touch TEE-eligible sets") {
    CacheGeometry g{256, 8, 64};
    Cache cache(g, PartitionPolicy::software_set_allocation(128, 256));
    Rng rng(11);
    VictimOptions options;
    options.decoy_accesses = 64;
    trigger_victim(VictimKey{}, one_table(4, 128 * 64), Plaintext{}, cache, options, rng);
    const OccupancyMap map = cache.occupancy_snapshot();
    for (uint32_t s = 0; s < 128; ++s)
        for (uint32_t w = 0; w < g.associativity; ++w)
            CHECK_FALSE(map.at(s, w).valid);
}

TEST_CASE("recoverable bits by entry and line size") {
    TableLayout layout = one_table(4);
    CHECK(recoverable_bits(layout, CacheGeometry{256, 8, 64}) == 4);   // 16 entries/line
    CHECK(recoverable_bits(one_table(64), CacheGeometry{256, 8, 64}) == 8); // 1 entry/line
    CHECK(recoverable_bits(layout, CacheGeometry{256, 8, 1024}) == 0); // whole table/line
}

TEST_CASE("layout validation") {
    CacheGeometry g{256, 8, 64};
    TableLayout bad = one_table(4, 32); // not line-aligned
    CHECK_THROWS_AS(bad.validate(g), Error);
    TableLayout big = one_table(128); // entry larger than a line
    CHECK_THROWS_AS(big.validate(g), Error);
    TableLayout none;
    none.table_bases.clear();
    CHECK_THROWS_AS(none.validate(g), Error);
}

TEST_CASE("key hex round trip") {
    const VictimKey key = key_from_hex("000102030405060708090a0b0c0d0e0f");
    CHECK(key[0] == 0);
    CHECK(key[15] == 0x0f);
    CHECK(key_to_hex(key) == "000102030405060708090a0b0c0d0e0f");
    CHECK_THROWS_AS(key_from_hex("zz"), Error);
    CHECK_THROWS_AS(key_from_hex("00"), Error);
}
