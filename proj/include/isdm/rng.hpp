#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace isdm {

// SplitMix64 with keyed streams.
//
// A stream is identified by a master seed and any number of integer keys
// (worker index, model index, episode index, ...). Keys are folded through the
// SplitMix64 finalizer, so every (seed, keys...) tuple yields its own
// reproducible sequence, independent of thread count or scheduling.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed) : state_(mix(seed)) {}

  SplitMix64(std::uint64_t seed, std::initializer_list<std::uint64_t> keys)
      : state_(mix(seed)) {
    for (auto k : keys) state_ = mix(state_ ^ mix(k + kGolden));
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    state_ += kGolden;
    return mix(state_);
  }

  // Uniform on the open interval (0, 1) with 53 random bits.
  double uniform() {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

}  // namespace isdm
