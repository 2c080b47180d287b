#pragma once

#include <cstdint>

namespace ncrelay {

// SplitMix64: the splittable 64-bit generator of Steele, Lea and Flood.
// One multiply-xor-shift finalizer over a Weyl sequence; replication
// streams are derived from a base seed by fixed offsets pushed through the
// finalizer, so results are reproducible for any thread count.
class SplitMix64 {
 public:
  explicit SplitMix64(uint64_t seed) : state_(seed) {}

  static SplitMix64 stream(uint64_t seed, uint64_t stream_index) {
    return SplitMix64(mix(seed + 0x9E3779B97F4A7C15ULL * (stream_index + 1)));
  }

  uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix(state_);
  }

  // Uniform in [0, 1), 53 random bits.
  double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  static uint64_t mix(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  uint64_t state_;
};

}  // namespace ncrelay
