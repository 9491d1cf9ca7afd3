#pragma once

#include <cstdint>
#include <random>

namespace wass {

// Seeded generator used by every randomized construction in the library.
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard; uniforms are built from the top 53 bits so that the streams do
// not depend on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : engine_() % n; }

  static constexpr const char* algorithm() { return "mt19937_64/top53"; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace wass
