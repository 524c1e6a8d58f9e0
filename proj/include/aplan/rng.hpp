#pragma once

#include <cstdint>

namespace aplan {

// SplitMix64 stream. Chosen because it is trivially portable: any
// implementation seeded with the same value produces the same sequence,
// which keeps generated scenarios and oracle instances reproducible
// across platforms. Substreams are derived by hashing (seed, index) so
// trials can be partitioned across workers deterministically.
class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1) from the top 53 bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Uniform integer in [0, n).
    std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

    // Deterministic substream for worker/trial partitioning.
    static SplitMix64 substream(std::uint64_t seed, std::uint64_t index) {
        SplitMix64 mixer(seed ^ (0xD1B54A32D192ED03ull * (index + 1)));
        return SplitMix64(mixer.next_u64());
    }

  private:
    std::uint64_t state_;
};

}  // namespace aplan
