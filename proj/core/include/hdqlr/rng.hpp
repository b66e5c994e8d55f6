#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <limits>

namespace hdqlr {

// SplitMix64 step. Used to expand a single seed into generator state and to
// derive independent stream seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Deterministic seed for a sub-stream identified by a list of keys.
// derive_seed(s, {a, b}) != derive_seed(s, {b, a}) in general.
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys);

/// xoshiro256** 1.0, state seeded from SplitMix64(seed).
///
/// Every random quantity in the library is produced from this generator with
/// the transformations below, so results are reproducible from the seed alone
/// on any platform with IEEE doubles and a correctly rounded libm.
///   uniform():      (next() >> 11) * 2^-53, in [0, 1)
///   below(n):       Lemire's multiply-shift with rejection, in [0, n)
///   normal():       Box-Muller on (1 - uniform(), uniform()), both variates
///                   used in order (cos branch first)
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return next(); }
  result_type next();

  double uniform();
  std::uint64_t below(std::uint64_t n);
  double normal();

 private:
  std::array<std::uint64_t, 4> s_{};
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace hdqlr
