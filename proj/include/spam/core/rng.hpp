#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace spam {

// The std distributions are implementation-defined, so every draw goes
// through these helpers to keep corpora bit-identical across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x = 0;
    do {
      x = engine_();
    } while (x >= limit);
    return static_cast<std::size_t>(x % n);
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// Standard normal via Box-Muller.
  double normal();

 private:
  std::mt19937_64 engine_;
};

/// FNV-1a 64-bit.
std::uint64_t fnv1a64(std::string_view text);

/// Deterministic child seed for a named stream.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream);

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

}  // namespace spam
