#pragma once

#include <cstdint>
#include <random>

#include "wepo/hash.hpp"

namespace wepo {

// Deterministic RNG wrapper. std::mt19937_64 output is fully specified by the
// standard; the std distributions are not, so uniform doubles and bounded ints
// are produced here by hand. Two runs with the same seed draw identical
// sequences on any platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 bits of precision.
    double uniform_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [0, bound). Rejection sampling over a power-of-two
    // mask keeps the draw exactly uniform and platform-stable.
    std::uint64_t bounded(std::uint64_t bound) {
        if (bound <= 1) return 0;
        std::uint64_t mask = bound - 1;
        mask |= mask >> 1;
        mask |= mask >> 2;
        mask |= mask >> 4;
        mask |= mask >> 8;
        mask |= mask >> 16;
        mask |= mask >> 32;
        for (;;) {
            std::uint64_t v = next_u64() & mask;
            if (v < bound) return v;
        }
    }

private:
    std::mt19937_64 engine_;
};

// Per-step seeds are derived, not sequential, so steps can be processed in any
// order (or in parallel) with identical results.
inline std::uint64_t derive_seed(std::uint64_t global_seed, std::uint64_t index) {
    return mix_u64(global_seed, index);
}

}  // namespace wepo
