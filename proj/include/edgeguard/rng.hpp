#pragma once

#include <cstdint>
#include <random>

namespace edgeguard {

/// Seeded generator with a fixed algorithm (64-bit Mersenne Twister) and
/// platform-independent derived distributions. std:: distributions are
/// implementation-defined, so none are used here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [lo, hi] (inclusive), unbiased by rejection.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  /// Standard normal via Box-Muller; the second variate is cached.
  double normal();

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Derives an independent stream seed from a base seed and a tag, e.g. one
/// stream per sample or per grid cell.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag);

}  // namespace edgeguard
