#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "core/world.hpp"

namespace truspy {

struct CacheGeometry {
    uint32_t num_sets = 256;
    uint32_t associativity = 8;
    uint32_t line_size = 64; // bytes

    void validate() const; // throws Errc::Config; all fields powers of two
    uint64_t capacity_bytes() const {
        return uint64_t(num_sets) * associativity * line_size;
    }
};

/// set index = floor(address / line_size) mod num_sets
uint32_t set_index_of(uint64_t address, const CacheGeometry& geometry);

/// How the two worlds may occupy the cache. The split is fixed for the
/// lifetime of a Cache instance.
struct PartitionPolicy {
    enum class Kind : uint8_t {
        Shared,                // any world may occupy any line
        HardwareWaySplit,      // per-set way reservation: TEE gets ways
                               // [0, tee_ways), REE gets [tee_ways, assoc)
        SoftwareSetAllocation, // set-index range reservation: TEE may only
                               // touch sets in [tee_set_begin, tee_set_end),
                               // REE only the complement
    };

    Kind kind = Kind::Shared;
    uint32_t tee_ways = 0;
    uint32_t tee_set_begin = 0;
    uint32_t tee_set_end = 0;

    static PartitionPolicy shared();
    static PartitionPolicy hardware_way_split(uint32_t tee_ways);
    static PartitionPolicy software_set_allocation(uint32_t begin, uint32_t end);

    void validate(const CacheGeometry& geometry) const; // throws Errc::Config

    /// Whether `world` may touch `set` at all (only SoftwareSetAllocation
    /// restricts this).
    bool set_allowed(World world, uint32_t set) const;

    /// Half-open way interval `world` may occupy within a set.
    std::pair<uint32_t, uint32_t> way_range(World world,
                                            const CacheGeometry& geometry) const;

    uint32_t ways_for(World world, const CacheGeometry& geometry) const {
        auto [first, last] = way_range(world, geometry);
        return last - first;
    }
};

enum class AccessOutcome : uint8_t { Hit, MissNoEvict, MissEvict };

struct AccessRecord {
    World world;
    uint64_t address;
    AccessOutcome outcome;
    World evicted_world; // meaningful only for MissEvict
};

struct LineSnapshot {
    bool valid = false;
    World world = World::REE;
};

/// Read-only copy of per-(set, way) occupancy. Taking one never perturbs
/// replacement state.
struct OccupancyMap {
    CacheGeometry geometry;
    std::vector<LineSnapshot> lines; // row-major: set * associativity + way

    const LineSnapshot& at(uint32_t set, uint32_t way) const {
        return lines[size_t(set) * geometry.associativity + way];
    }
};

/// Set-associative cache with NS-bit-tagged lines and strict LRU replacement.
/// Replacement order is tracked with a monotonically increasing use stamp;
/// stamps of valid lines are distinct by construction, and the LRU victim is
/// the valid line with the smallest stamp among the ways the accessing world
/// is allowed to occupy.
class Cache {
public:
    Cache(CacheGeometry geometry, PartitionPolicy policy);

    /// Performs one world-tagged access. Throws Errc::PolicyViolation when a
    /// SoftwareSetAllocation access targets a set outside the world's range.
    AccessRecord access(World world, uint64_t address);

    /// Fills every way `world` may occupy in every target set, using the
    /// deterministic synthetic addresses from prime_address(). Returns the
    /// number of lines actually written (misses); re-priming an undisturbed
    /// cache writes nothing. Validates all target sets before mutating.
    uint64_t prime_world_lines(World world, std::span<const uint32_t> target_sets);

    OccupancyMap occupancy_snapshot() const;

    uint64_t cross_world_evictions() const { return cross_world_evictions_; }

    const CacheGeometry& geometry() const { return geometry_; }
    const PartitionPolicy& policy() const { return policy_; }

    /// Under HardwareWaySplit: no valid line sits in a way reserved for the
    /// other world. Trivially true for the other policies.
    bool partition_invariant_holds() const;

    /// Synthetic address owned by `world` that maps to `set` and has a tag
    /// unique per (world, set, way). Prime and probe use identical lists of
    /// these, so a probe re-access hits exactly when the primed line
    /// survived. World bases sit far above any victim table address.
    static uint64_t prime_address(World world, uint32_t set, uint32_t way,
                                  const CacheGeometry& geometry);

private:
    struct Line {
        bool valid = false;
        uint64_t tag = 0;
        World world = World::REE;
        uint64_t lru_stamp = 0;
    };

    Line& line(uint32_t set, uint32_t way) {
        return lines_[size_t(set) * geometry_.associativity + way];
    }
    const Line& line(uint32_t set, uint32_t way) const {
        return lines_[size_t(set) * geometry_.associativity + way];
    }

    CacheGeometry geometry_;
    PartitionPolicy policy_;
    std::vector<Line> lines_;
    uint64_t next_stamp_ = 1;
    uint64_t cross_world_evictions_ = 0;
};

} // namespace truspy
