#include "core/cache.hpp"

#include <string>

#include "core/errors.hpp"

namespace truspy {

namespace {

bool is_pow2(uint64_t v) { return v != 0 && (v & (v - 1)) == 0; }

// Synthetic prime/probe address spaces, one per world, both multiples of
// any supported num_sets * line_size so the set index comes out exact.
constexpr uint64_t kWorldAddressBase[2] = {1ull << 40, 1ull << 41};

} // namespace

const char* to_string(World w) {
    return w == World::REE ? "REE" : "TEE";
}

World world_from_string(std::string_view s) {
    if (s == "REE" || s == "ree") return World::REE;
    if (s == "TEE" || s == "tee") return World::TEE;
    throw Error(Errc::Config, "unknown world tag: " + std::string(s));
}

const char* errc_name(Errc code) {
    switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::Config: return "ConfigError";
    case Errc::PolicyViolation: return "PolicyViolation";
    case Errc::LayoutError: return "LayoutError";
    case Errc::AuthFailure: return "AuthFailure";
    case Errc::RoleError: return "RoleError";
    case Errc::NotAuthenticated: return "NotAuthenticated";
    case Errc::TripleDenied: return "TripleDenied";
    case Errc::TokenInvalid: return "TokenInvalid";
    case Errc::NotFound: return "NotFound";
    case Errc::EmptyData: return "EmptyData";
    case Errc::InsufficientData: return "InsufficientData";
    case Errc::UnknownParameter: return "UnknownParameter";
    case Errc::IoError: return "IoError";
    }
    return "Unknown";
}

void CacheGeometry::validate() const {
    if (!is_pow2(num_sets))
        throw Error(Errc::Config, "geometry.num_sets must be a power of two >= 1");
    if (!is_pow2(associativity))
        throw Error(Errc::Config, "geometry.associativity must be a power of two >= 1");
    if (!is_pow2(line_size))
        throw Error(Errc::Config, "geometry.line_size must be a power of two >= 1");
    if (uint64_t(num_sets) * line_size > (1ull << 38))
        throw Error(Errc::Config, "geometry exceeds supported address layout");
}

uint32_t set_index_of(uint64_t address, const CacheGeometry& geometry) {
    return static_cast<uint32_t>((address / geometry.line_size) % geometry.num_sets);
}

PartitionPolicy PartitionPolicy::shared() {
    return PartitionPolicy{};
}

PartitionPolicy PartitionPolicy::hardware_way_split(uint32_t tee_ways) {
    PartitionPolicy p;
    p.kind = Kind::HardwareWaySplit;
    p.tee_ways = tee_ways;
    return p;
}

PartitionPolicy PartitionPolicy::software_set_allocation(uint32_t begin, uint32_t end) {
    PartitionPolicy p;
    p.kind = Kind::SoftwareSetAllocation;
    p.tee_set_begin = begin;
    p.tee_set_end = end;
    return p;
}

void PartitionPolicy::validate(const CacheGeometry& geometry) const {
    switch (kind) {
    case Kind::Shared:
        break;
    case Kind::HardwareWaySplit:
        if (tee_ways == 0 || tee_ways >= geometry.associativity)
            throw Error(Errc::Config,
                        "policy.tee_ways must satisfy 0 < tee_ways < associativity");
        break;
    case Kind::SoftwareSetAllocation:
        if (tee_set_begin >= tee_set_end || tee_set_end > geometry.num_sets)
            throw Error(Errc::Config,
                        "policy.tee_set range must be a non-empty subrange of [0, num_sets)");
        if (tee_set_begin == 0 && tee_set_end == geometry.num_sets)
            throw Error(Errc::Config,
                        "policy.tee_set range leaves no sets for the REE");
        break;
    }
}

bool PartitionPolicy::set_allowed(World world, uint32_t set) const {
    if (kind != Kind::SoftwareSetAllocation)
        return true;
    bool in_tee_range = set >= tee_set_begin && set < tee_set_end;
    return (world == World::TEE) == in_tee_range;
}

std::pair<uint32_t, uint32_t>
PartitionPolicy::way_range(World world, const CacheGeometry& geometry) const {
    if (kind == Kind::HardwareWaySplit) {
        if (world == World::TEE)
            return {0, tee_ways};
        return {tee_ways, geometry.associativity};
    }
    return {0, geometry.associativity};
}

Cache::Cache(CacheGeometry geometry, PartitionPolicy policy)
    : geometry_(geometry), policy_(policy) {
    geometry_.validate();
    policy_.validate(geometry_);
    lines_.resize(size_t(geometry_.num_sets) * geometry_.associativity);
}

AccessRecord Cache::access(World world, uint64_t address) {
    const uint32_t set = set_index_of(address, geometry_);
    if (!policy_.set_allowed(world, set))
        throw Error(Errc::PolicyViolation,
                    std::string(to_string(world)) + " access to set " +
                        std::to_string(set) + " outside its allocated range");

    const uint64_t tag = address / geometry_.line_size;
    const auto [first_way, last_way] = policy_.way_range(world, geometry_);

    for (uint32_t w = first_way; w < last_way; ++w) {
        Line& l = line(set, w);
        if (l.valid && l.tag == tag) {
            l.lru_stamp = next_stamp_++;
            return {world, address, AccessOutcome::Hit, world};
        }
    }

    // Miss: fill the lowest-index invalid way, else evict the LRU line
    // among the ways this world may occupy.
    for (uint32_t w = first_way; w < last_way; ++w) {
        Line& l = line(set, w);
        if (!l.valid) {
            l = Line{true, tag, world, next_stamp_++};
            return {world, address, AccessOutcome::MissNoEvict, world};
        }
    }

    uint32_t victim = first_way;
    for (uint32_t w = first_way + 1; w < last_way; ++w) {
        if (line(set, w).lru_stamp < line(set, victim).lru_stamp)
            victim = w;
    }
    Line& l = line(set, victim);
    const World evicted_world = l.world;
    if (evicted_world != world)
        ++cross_world_evictions_;
    l = Line{true, tag, world, next_stamp_++};
    return {world, address, AccessOutcome::MissEvict, evicted_world};
}

uint64_t Cache::prime_world_lines(World world, std::span<const uint32_t> target_sets) {
    for (uint32_t set : target_sets) {
        if (set >= geometry_.num_sets)
            throw Error(Errc::InvalidArgument,
                        "target set " + std::to_string(set) + " out of range");
        if (!policy_.set_allowed(world, set))
            throw Error(Errc::PolicyViolation,
                        std::string(to_string(world)) + " cannot prime set " +
                            std::to_string(set) + " outside its allocated range");
    }

    const auto [first_way, last_way] = policy_.way_range(world, geometry_);
    uint64_t filled = 0;
    for (uint32_t set : target_sets) {
        for (uint32_t w = first_way; w < last_way; ++w) {
            AccessRecord rec = access(world, prime_address(world, set, w, geometry_));
            if (rec.outcome != AccessOutcome::Hit)
                ++filled;
        }
    }
    return filled;
}

OccupancyMap Cache::occupancy_snapshot() const {
    OccupancyMap map;
    map.geometry = geometry_;
    map.lines.reserve(lines_.size());
    for (const Line& l : lines_)
        map.lines.push_back({l.valid, l.world});
    return map;
}

bool Cache::partition_invariant_holds() const {
    if (policy_.kind != PartitionPolicy::Kind::HardwareWaySplit)
        return true;
    for (uint32_t set = 0; set < geometry_.num_sets; ++set) {
        for (uint32_t w = 0; w < geometry_.associativity; ++w) {
            const Line& l = line(set, w);
            if (!l.valid)
                continue;
            const World owner = w < policy_.tee_ways ? World::TEE : World::REE;
            if (l.world != owner)
                return false;
        }
    }
    return true;
}

uint64_t Cache::prime_address(World world, uint32_t set, uint32_t way,
                              const CacheGeometry& geometry) {
    const uint64_t base = kWorldAddressBase[static_cast<size_t>(world)];
    return base + (uint64_t(way) * geometry.num_sets + set) * geometry.line_size;
}

} // namespace truspy
