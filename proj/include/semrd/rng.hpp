#pragma once

// Seeded random streams. Every stream is an mt19937_64 whose seed is derived
// from a root seed and a path of stream indices, so independent consumers
// (multistart branches, Monte Carlo trials, common-randomness substreams)
// never share state.

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

#include <Eigen/Dense>

namespace semrd {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t root,
                                 std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = splitmix64(root);
  for (std::uint64_t p : path) s = splitmix64(s ^ splitmix64(p + 0x632be59bd9b4e019ULL));
  return s;
}

class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Unit-rate exponential variate.
  double exponential() { return -std::log1p(-uniform()); }

  /// Draw an index from a probability vector by inverse CDF.
  template <typename Derived>
  Eigen::Index categorical(const Eigen::MatrixBase<Derived>& probs) {
    const double u = uniform();
    double cdf = 0;
    Eigen::Index last = 0;
    for (Eigen::Index i = 0; i < probs.size(); ++i) {
      if (probs(i) <= 0) continue;
      last = i;
      cdf += probs(i);
      if (u < cdf) return i;
    }
    return last;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace semrd
