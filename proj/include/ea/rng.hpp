#pragma once

// Counter-based generator used everywhere randomness is needed. The sequence
// for a given seed is part of the on-disk data contract: suites regenerate
// bit-identically on any platform, so no std library engine or distribution
// is used anywhere (their streams are implementation-defined).
//
// This is the splitmix64 finalizer (Steele, Lea, Flood; public domain
// reference constants). State advances by the golden-ratio increment and is
// mixed through two xor-multiply rounds.

#include <cstdint>

namespace ea {

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix(state_);
  }

  // uniform in [0,1) from the top 53 bits
  double next_unit() { return double(next() >> 11) * 0x1.0p-53; }

  double next_range(double lo, double hi) { return lo + next_unit() * (hi - lo); }

  // uniform integer in [lo, hi], both inclusive
  int next_int(int lo, int hi) {
    const std::uint64_t span = std::uint64_t(hi - lo) + 1;
    return lo + int(next() % span);
  }

 private:
  std::uint64_t state_;
};

// Independent stream per frame: the suite seed and the frame index are mixed
// twice so neighbouring indices share no structure.
inline std::uint64_t frame_key(std::uint64_t seed, std::uint64_t frame_index) {
  return SplitMix64::mix(SplitMix64::mix(seed) ^ (frame_index + 0x9E3779B97F4A7C15ULL));
}

}  // namespace ea
