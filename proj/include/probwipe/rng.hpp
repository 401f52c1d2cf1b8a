#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>

namespace probwipe {

// mt19937_64 with hand-rolled draws so results do not depend on the standard
// library's distribution implementations (those are not pinned by the
// standard; the raw generator sequence is).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next() { return eng_(); }

  // Unbiased draw from [0, n) via rejection.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below: n must be positive");
    const std::uint64_t rem = (std::numeric_limits<std::uint64_t>::max() % n + 1) % n;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - rem;
    std::uint64_t r = next();
    while (rem != 0 && r > limit) r = next();
    return r % n;
  }

  // Uniform double in [0, 1) with 53 random bits.
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 eng_;
};

}  // namespace probwipe
