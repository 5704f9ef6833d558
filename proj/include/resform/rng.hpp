#pragma once

#include <cstdint>

namespace resform {

// Counter-based generator (SplitMix64 finalizer). Draw i of a stream is a pure
// function of (seed, i), so generator output is reproducible across platforms
// and implementations; consumers document their draw order.
inline std::uint64_t splitmix64(std::uint64_t seed, std::uint64_t counter) {
    std::uint64_t z = seed + (counter + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Uniform double in [0, 1) from draw `counter` of stream `seed`.
inline double uniform_draw(std::uint64_t seed, std::uint64_t counter) {
    return static_cast<double>(splitmix64(seed, counter) >> 11) * 0x1.0p-53;
}

} // namespace resform
