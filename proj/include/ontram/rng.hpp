#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace ontram::rng {

// std::mt19937_64 raw output is fully specified by the standard; all
// distributions below are hand-rolled on top of it so that every seeded
// sequence is identical across platforms and standard libraries.
using engine = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Deterministic per-stream seed derivation (folds, bootstrap replicates,
// patients). Independent of evaluation order and parallelism.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  return splitmix64(splitmix64(base) ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
}

inline engine make_engine(std::uint64_t seed) { return engine(splitmix64(seed)); }

// Uniform double in [0, 1) with 53 random bits.
inline double uniform(engine& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

inline double uniform(engine& g, double lo, double hi) {
  return lo + (hi - lo) * uniform(g);
}

// Unbiased integer in [0, n) by rejection.
inline std::uint64_t uniform_below(engine& g, std::uint64_t n) {
  const std::uint64_t limit = ~std::uint64_t{0} - ~std::uint64_t{0} % n;
  std::uint64_t x;
  do {
    x = g();
  } while (x >= limit);
  return x % n;
}

inline bool bernoulli(engine& g, double p) { return uniform(g) < p; }

// Box-Muller without caching; consumes two uniforms per draw.
inline double normal(engine& g) {
  double u1;
  do {
    u1 = uniform(g);
  } while (u1 <= 0.0);
  const double u2 = uniform(g);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
}

// Standard logistic draw via inverse CDF.
inline double logistic(engine& g) {
  double u;
  do {
    u = uniform(g);
  } while (u <= 0.0 || u >= 1.0);
  return std::log(u / (1.0 - u));
}

// Fisher-Yates with explicit bounded draws.
template <typename T>
void shuffle(std::vector<T>& v, engine& g) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(uniform_below(g, i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace ontram::rng
