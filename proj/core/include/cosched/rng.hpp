#pragma once

#include <cstdint>

namespace cosched {

/// Counter-based generator: every draw is a pure function of (seed, stream
/// indices), so parallel and serial sampling orders agree bit-for-bit.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream_a = 0, std::uint64_t stream_b = 0)
      : state_(mix(mix(mix(0x9e3779b97f4a7c15ULL ^ seed, stream_a), stream_b), 0x2545f4914f6cdd1dULL)) {}

  std::uint64_t next_u64() {
    state_ = mix(state_, 0xbf58476d1ce4e5b9ULL);
    return state_;
  }

  /// Uniform in [0, 1).
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n).
  std::uint64_t next_below(std::uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

 private:
  static std::uint64_t mix(std::uint64_t z, std::uint64_t salt) {
    z += 0x9e3779b97f4a7c15ULL + salt;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  std::uint64_t state_;
};

}  // namespace cosched
