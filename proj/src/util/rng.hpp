#ifndef OWC_UTIL_RNG_HPP
#define OWC_UTIL_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace owc {

// Deterministic RNG wrapper. Distribution sampling is hand-rolled on top of
// mt19937_64 so that output streams do not depend on the standard library's
// unspecified distribution algorithms.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : gen_(seed), seed_mix_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // uniform in [0, 1)
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [0, n)
  std::uint64_t uniform_index(std::uint64_t n) {
    // modulo bias is negligible for the n used here (n << 2^64)
    return gen_() % n;
  }

  // standard normal via Box-Muller (deterministic, two uniforms per pair)
  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925287 * u2;
    cached_ = r * std::sin(a);
    have_cached_ = true;
    return r * std::cos(a);
  }

  // derive an independent stream, e.g. one per sample index
  Rng derive(std::uint64_t stream) const {
    // splitmix64 over (state seed ^ stream) for decorrelated child seeds
    std::uint64_t z = seed_mix_ ^ (stream + 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return Rng(z ^ (z >> 31));
  }

private:
  std::mt19937_64 gen_;
  std::uint64_t seed_mix_ = 0;
  bool have_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace owc

#endif
