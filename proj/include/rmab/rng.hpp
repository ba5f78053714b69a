#pragma once

#include <cstdint>

namespace rmab {

// Counter-based pseudo-random generator (SplitMix64). The stream for a given
// seed is identical on every platform: only fixed-width unsigned arithmetic
// with the constants below is used.
//
//   increment: 0x9E3779B97F4A7C15 (2^64 / golden ratio)
//   mix:       0xBF58476D1CE4E5B9, 0x94D049BB133111EB (Stafford mix13)
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). Modulo bias is < n / 2^64, irrelevant here,
    // and keeping the reduction branch-free keeps streams reproducible.
    std::uint64_t uniform_int(std::uint64_t n) { return next_u64() % n; }

    // Independent child stream. Mixing the stream id through the same
    // finalizer decorrelates children from the parent and from each other.
    Rng split(std::uint64_t stream) const {
        std::uint64_t z = state_ ^ (0xD1B54A32D192ED03ULL * (stream + 1));
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return Rng(z ^ (z >> 31));
    }

  private:
    std::uint64_t state_;
};

} // namespace rmab
