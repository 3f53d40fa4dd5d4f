#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace adahi {

// Deterministic, splittable random stream (xoshiro256** seeded via
// splitmix64). Uniform doubles are produced from the top 53 bits of the
// raw output so results do not depend on the standard library's
// distribution implementations.
class RngStream {
  public:
    explicit RngStream(uint64_t seed) : seed_(seed) {
        uint64_t x = seed;
        for (auto& s : state_) s = splitmix64(x);
    }

    // Derives an independent stream keyed by (seed, id). Substreams of
    // the same parent with distinct ids do not overlap in practice.
    RngStream substream(uint64_t id) const {
        uint64_t x = seed_ ^ (0x9E3779B97F4A7C15ULL * (id + 1));
        return RngStream(splitmix64(x));
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Standard normal via Box-Muller (no caching, one value per call).
    double normal() {
        double u1 = 1.0 - uniform();  // (0, 1]
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * std::numbers::pi * u2);
    }

    bool bernoulli(double p) { return uniform() < p; }

    uint64_t seed() const { return seed_; }

  private:
    static uint64_t splitmix64(uint64_t& x) {
        x += 0x9E3779B97F4A7C15ULL;
        uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    uint64_t seed_;
    uint64_t state_[4];
};

}  // namespace adahi
