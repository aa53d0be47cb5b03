#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace blade {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Derives an independent stream seed from (seed, stream id), so generation
// order does not couple unrelated components.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t s = seed ^ (0x9e3779b97f4a7c15ull * (stream + 1));
  return splitmix64(s);
}

// mt19937_64 with hand-rolled samplers. std::*_distribution output is
// implementation-defined, so every draw here goes through explicit inverse
// transforms / Box-Muller to keep seeded output identical across platforms.
// The PRNG name recorded in manifests is "mt19937_64".
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  static const char* algorithm() { return "mt19937_64"; }

  double uniform01() {
    // 53-bit mantissa in [0, 1)
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // inclusive bounds
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(engine_() % span);
  }

  double exponential(double mean) { return -mean * std::log1p(-uniform01()); }

  double normal(double mu = 0.0, double sigma = 1.0) {
    // Box-Muller; the second variate is discarded so each call consumes a
    // fixed number of engine draws.
    double u1 = uniform01(), u2 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    return mu + sigma * r * std::cos(2.0 * M_PI * u2);
  }

  double lognormal(double log_mean, double sigma) { return std::exp(normal(std::log(log_mean), sigma)); }

  double bernoulli(double p) { return uniform01() < p; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    // Fisher-Yates with explicit index draws (std::shuffle is not portable).
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(v[i - 1], v[j]);
    }
  }

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace blade
