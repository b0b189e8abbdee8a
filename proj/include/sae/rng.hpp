#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace sae {

// splitmix64 step; used both for seed derivation and stream splitting.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Deterministically derive an independent stream seed from a master seed,
// a role tag, and an index (chain number, replicate, unit, ...).
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                                 std::uint64_t index) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : tag) h = (h ^ static_cast<unsigned char>(c)) * 0x100000001b3ULL;
  std::uint64_t s = master;
  splitmix64(s);
  s ^= h;
  splitmix64(s);
  s ^= index;
  return splitmix64(s);
}

// Random stream with explicitly coded variate algorithms so that draws are
// reproducible across standard libraries (std::*_distribution is not
// guaranteed portable).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on [0, 1).
  double uniform() { return (gen_() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // Uniform integer on [0, n).
  std::int64_t uniform_int(std::int64_t n) {
    // modulo rejection to avoid bias
    const std::uint64_t un = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % un;
    std::uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return static_cast<std::int64_t>(x % un);
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Standard normal via the Marsaglia polar method.
  double normal() {
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    return u * std::sqrt(-2.0 * std::log(s) / s);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  // Gamma(shape, rate) via Marsaglia-Tsang; shape >= 0.01 supported.
  double gamma(double shape, double rate) {
    if (shape < 1.0) {
      const double u = uniform();
      return gamma(shape + 1.0, rate) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v / rate;
    }
  }

  // Inverse-gamma(shape, scale): density ~ x^{-shape-1} exp(-scale/x).
  double inv_gamma(double shape, double scale) { return 1.0 / gamma(shape, scale); }

 private:
  std::mt19937_64 gen_;
};

}  // namespace sae
