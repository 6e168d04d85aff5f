#pragma once

#include <cstdint>
#include <string_view>

namespace truspy {

/// The NS-bit: every memory access, cache line, and data transfer belongs to
/// exactly one of the two worlds.
enum class World : uint8_t {
    REE = 0, // non-secure (rich execution environment)
    TEE = 1, // secure (trusted execution environment)
};

inline World other_world(World w) {
    return w == World::REE ? World::TEE : World::REE;
}

const char* to_string(World w);
World world_from_string(std::string_view s); // throws Errc::Config

} // namespace truspy
