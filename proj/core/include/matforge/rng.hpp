#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace matforge {

// Portable seeded generator: 64-bit LCG step with Knuth's MMIX constants
// (a = 6364136223846793005, c = 1442695040888963407) followed by a
// murmur3 fmix64 output mix. Bounded draws use rejection sampling, so a
// given seed yields the same sequence on every platform and compiler,
// unlike std::uniform_int_distribution.
class Lcg64 {
 public:
  static constexpr std::uint64_t kMultiplier = 6364136223846793005ULL;
  static constexpr std::uint64_t kIncrement = 1442695040888963407ULL;

  explicit Lcg64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next();

  // Uniform in [0, n); n must be > 0.
  std::uint64_t below(std::uint64_t n);

  // Fisher-Yates, last index first.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t state_;
};

}  // namespace matforge
