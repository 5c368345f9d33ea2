#pragma once

#include <cstdint>
#include <random>

namespace pizzamon {

// mt19937_64 has a bit-exact definition in the standard; the distributions do
// not, so bounded draws are done here with rejection sampling.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform over [0, n). n > 0.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = std::uint64_t(-1) - (std::uint64_t(-1) % n + 1) % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x > limit);
    return x % n;
  }

  // Uniform over [lo, hi]. lo <= hi.
  std::int64_t between(std::int64_t lo, std::int64_t hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) return lo + static_cast<std::int64_t>(engine_());
    return lo + static_cast<std::int64_t>(below(span));
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace pizzamon
