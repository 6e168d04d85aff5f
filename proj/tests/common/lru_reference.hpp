#pragma once

// Brute-force LRU reference model for cross-checking the cache: one
// recency-ordered list per (set, world-partition), most recent in front.
// Must stay independent of the Cache implementation: no stamps, no way
// indices, no shared helpers.

#include <cstdint>
#include <list>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "core/cache.hpp"

namespace truspy_test {

class ReferenceLru {
public:
    struct Result {
        truspy::AccessOutcome outcome;
        truspy::World evicted_world; // meaningful for MissEvict
    };

    ReferenceLru(truspy::CacheGeometry geometry, truspy::PartitionPolicy policy)
        : geometry_(geometry), policy_(policy) {}

    Result access(truspy::World world, uint64_t address) {
        using truspy::AccessOutcome;
        using truspy::PartitionPolicy;
        using truspy::World;

        const uint32_t set = truspy::set_index_of(address, geometry_);
        if (!policy_.set_allowed(world, set))
            throw std::logic_error("reference model: policy-violating access");

        const uint64_t tag = address / geometry_.line_size;
        const size_t capacity = policy_.ways_for(world, geometry_);
        auto& lines = list_for(world, set);

        for (auto it = lines.begin(); it != lines.end(); ++it) {
            if (it->tag == tag) {
                lines.splice(lines.begin(), lines, it);
                return {AccessOutcome::Hit, world};
            }
        }
        if (lines.size() < capacity) {
            lines.push_front({tag, world});
            return {AccessOutcome::MissNoEvict, world};
        }
        const World evicted = lines.back().world;
        lines.pop_back();
        lines.push_front({tag, world});
        if (evicted != world)
            ++cross_world_evictions_;
        return {AccessOutcome::MissEvict, evicted};
    }

    uint64_t cross_world_evictions() const { return cross_world_evictions_; }

private:
    struct Line {
        uint64_t tag;
        truspy::World world;
    };

    // Under HardwareWaySplit the worlds have independent capacity within a
    // set; everywhere else a single list models the whole set.
    std::list<Line>& list_for(truspy::World world, uint32_t set) {
        const bool split = policy_.kind == truspy::PartitionPolicy::Kind::HardwareWaySplit;
        const uint32_t partition =
            split && world == truspy::World::TEE ? 1 : 0;
        return sets_[{set, partition}];
    }

    truspy::CacheGeometry geometry_;
    truspy::PartitionPolicy policy_;
    std::map<std::pair<uint32_t, uint32_t>, std::list<Line>> sets_;
    uint64_t cross_world_evictions_ = 0;
};

} // namespace truspy_test
