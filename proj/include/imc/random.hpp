#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace imc {

/// Seeded random source. Streams are derived from (seed, stream) through
/// std::seed_seq, whose output is fixed by the standard, so results are
/// reproducible across standard libraries. Uniform doubles are built from
/// the top 53 bits rather than through std::uniform_real_distribution.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    engine_.seed(seq);
  }

  std::uint64_t next() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform on {0, ..., n-1} (n >= 1), by rejection.
  std::size_t index(std::size_t n) {
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return static_cast<std::size_t>(x % bound);
  }

  /// Standard exponential, for Dirichlet draws.
  double exponential() { return -std::log1p(-uniform()); }

 private:
  std::mt19937_64 engine_;
};

/// Flat Dirichlet sample, renormalised so the entries sum to one.
inline std::vector<double> random_simplex_point(Rng& rng, std::size_t n) {
  std::vector<double> p(n);
  double sum = 0.0;
  for (double& a : p) {
    a = rng.exponential();
    sum += a;
  }
  if (sum == 0.0) {
    p.assign(n, 0.0);
    p[rng.index(n)] = 1.0;
    return p;
  }
  for (double& a : p) a /= sum;
  return p;
}

inline std::vector<double> random_vector(Rng& rng, std::size_t n, double lo, double hi) {
  std::vector<double> v(n);
  for (double& a : v) a = rng.uniform(lo, hi);
  return v;
}

}  // namespace imc
