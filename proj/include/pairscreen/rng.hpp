#pragma once

// Deterministic random streams. Every replication owns an engine seeded from
// (master seed, cell index, replication index), so results do not depend on
// how work is scheduled across threads.

#include <cstdint>
#include <random>

namespace pairscreen {

using Engine = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) {
    return mix64(mix64(parent) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

inline Engine make_stream(std::uint64_t seed) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    return Engine(seq);
}

inline Engine make_stream(std::uint64_t seed, std::uint64_t index) {
    return make_stream(derive_seed(seed, index));
}

}  // namespace pairscreen
