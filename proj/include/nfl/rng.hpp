#pragma once

#include <cstdint>

namespace nfl {

// SplitMix64: small, portable, seedable generator. Sample i of a run is
// derived from (seed, i) alone, so streams are stable under extension of the
// sample count and can be generated in parallel by index.
struct SplitMix64 {
    uint64_t state;

    explicit SplitMix64(uint64_t seed) : state(seed) {}

    uint64_t next() {
        uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1) with 53-bit resolution.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

// Per-sample stream: decorrelates (seed, index) before use.
inline SplitMix64 sample_stream(uint64_t seed, uint64_t index) {
    SplitMix64 mix(seed ^ (0x9E3779B97F4A7C15ULL + index * 0xD1B54A32D192ED03ULL));
    mix.next();
    return mix;
}

}  // namespace nfl
