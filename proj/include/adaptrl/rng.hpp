#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace adaptrl {

// Seeded random source. Wraps std::mt19937_64, whose output sequence is fixed
// by the standard; the conversions to floating point are done here so results
// do not depend on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n). n must be positive.
  std::size_t below(std::size_t n);

  // Standard normal via Box-Muller (no cached second value).
  double normal();

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

// Seed-derivation rule used throughout the harness:
//   h0 = splitmix64(master ^ K), h1 = splitmix64(h0 ^ a),
//   h2 = splitmix64(h1 ^ b),     seed = splitmix64(h2 ^ c)
// with K = 0x6164617074726C00. The harness passes (stream, model, run).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                          std::uint64_t b = 0, std::uint64_t c = 0);

}  // namespace adaptrl
