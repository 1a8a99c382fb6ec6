#pragma once

#include <cstdint>
#include <random>

namespace negtune {

// Deterministic substreams keyed by (seed, epoch, purpose) so an interrupted
// run resumed from a checkpoint replays exactly the same randomness as an
// uninterrupted one.
enum class RngPurpose : uint64_t {
    init = 1,
    shuffle = 2,
    crop = 3,
    noise = 4,
    fixture = 5,
};

inline std::mt19937_64 make_rng(uint64_t seed, uint64_t epoch, RngPurpose purpose) {
    // splitmix64 over the packed key
    uint64_t z = seed * 0x9e3779b97f4a7c15ULL + epoch * 0xbf58476d1ce4e5b9ULL +
                 static_cast<uint64_t>(purpose) * 0x94d049bb133111ebULL + 0x2545f4914f6cdd1dULL;
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return std::mt19937_64(z);
}

} // namespace negtune
