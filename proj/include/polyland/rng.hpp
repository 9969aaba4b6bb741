#pragma once

// Deterministic random streams. All sampling goes through this wrapper instead of
// <random> distributions, whose output is implementation-defined; trajectories and
// reports must be byte-identical for a given seed.

#include <cmath>
#include <cstdint>
#include <random>

namespace polyland {

class Rng {
public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  /// Derives an independent stream for substream `k` (trial index, sample index, ...).
  static Rng stream(std::uint64_t seed, std::uint64_t k) {
    return Rng(splitmix(seed + 0x9E3779B97F4A7C15ull * (k + 1)));
  }

  /// Uniform on [0,1) with 53-bit resolution.
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  /// Standard normal via Box-Muller; second value of each pair is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform01(), u2 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double m = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = m * std::sin(a);
    has_spare_ = true;
    return m * std::cos(a);
  }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Rejection-free modulo bias is negligible for the ranges used here (n << 2^64),
    // but keep it exact anyway via rejection on the top window.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x = gen_();
    while (x >= limit) x = gen_();
    return x % n;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

private:
  static std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
  }

  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace polyland
