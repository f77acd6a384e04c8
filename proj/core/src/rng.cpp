#include "matforge/rng.hpp"

namespace matforge {

std::uint64_t Lcg64::next() {
  state_ = state_ * kMultiplier + kIncrement;
  std::uint64_t x = state_;
  x ^= x >> 33;
  x *= 0xff51afd7ed558ccdULL;
  x ^= x >> 33;
  x *= 0xc4ceb9fe1a85ec53ULL;
  x ^= x >> 33;
  return x;
}

std::uint64_t Lcg64::below(std::uint64_t n) {
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    const std::uint64_t r = next();
    if (r >= threshold) return r % n;
  }
}

}  // namespace matforge
