#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace tdoalab {

// 64-bit finalizer used to derive independent stream seeds from small tuples.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ splitmix64(a + 0x9e3779b97f4a7c15ULL));
  h = splitmix64(h ^ splitmix64(b + 0x6a09e667f3bcc909ULL));
  return h;
}

// Seeded random source. The draw transforms are coded out explicitly instead
// of going through std::*_distribution, whose output sequences differ between
// standard library implementations; mt19937_64 itself is pinned by the
// standard, so a given seed yields the same values everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller, cosine branch only: exactly two engine steps per draw.
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1], keeps the log finite
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Gaussian truncated to +/- cut standard deviations, by rejection.
  double truncated_normal(double mean, double stddev, double cut = 3.0) {
    double z = normal();
    while (std::abs(z) > cut) z = normal();
    return mean + stddev * z;
  }

  double exponential(double mean) { return -mean * std::log1p(-uniform()); }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace tdoalab
