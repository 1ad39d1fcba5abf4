#pragma once

#include <cstdint>
#include <random>

namespace lastpassage {

using Engine = std::mt19937_64;

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed for an independent stream identified by (seed, stream, substream).
/// Streams depend only on their coordinates, never on scheduling, so any
/// partition of work across workers reproduces the same draws.
inline constexpr std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream,
                                           std::uint64_t substream = 0) noexcept {
    return splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ (substream * 0xd1b54a32d192ed03ULL));
}

inline Engine make_engine(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream = 0) {
    return Engine(stream_seed(seed, stream, substream));
}

}  // namespace lastpassage
