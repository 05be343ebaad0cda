#pragma once

#include <cmath>
#include <complex>
#include <cstdint>

namespace mamimo {

// Deterministic random stream (xoshiro256++) with explicit distribution
// transforms, so that results are reproducible bit-for-bit for a given seed
// regardless of the standard library in use. Worker streams are derived from
// the master seed with derive(); streams with distinct salts are independent
// for all practical purposes.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    // SplitMix64 seeding, as recommended for the xoshiro family.
    std::uint64_t x = seed;
    for (auto& word : state_) {
      x += 0x9e3779b97f4a7c15ULL;
      std::uint64_t z = x;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      word = z ^ (z >> 31);
    }
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; caches the second deviate.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    // u1 in (0, 1] so the log is finite.
    const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

  // Circularly symmetric complex Gaussian with E{|z|^2} = variance.
  std::complex<double> complex_normal(double variance) {
    const double scale = std::sqrt(variance / 2.0);
    return {scale * normal(), scale * normal()};
  }

  // Stateless seed mixing for deriving independent sub-streams.
  static std::uint64_t derive(std::uint64_t master, std::uint64_t salt0,
                              std::uint64_t salt1 = 0) {
    auto mix = [](std::uint64_t z) {
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      return z ^ (z >> 31);
    };
    std::uint64_t h = mix(master + 0x9e3779b97f4a7c15ULL);
    h = mix(h ^ (salt0 + 0x9e3779b97f4a7c15ULL));
    h = mix(h ^ (salt1 + 0x632be59bd9b4e019ULL));
    return h;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t state_[4] = {};
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace mamimo
