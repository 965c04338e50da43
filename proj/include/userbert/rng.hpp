#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace userbert {

/// Counter-based pseudo-random stream (splitmix64 output function).
///
/// Every stream is identified by a 64-bit key; draws advance only a counter,
/// so streams derived from the same key reproduce bit-for-bit regardless of
/// scheduling. Distribution sampling is hand-rolled (no std:: distributions)
/// so results are identical across standard libraries.
class CounterRng {
 public:
  explicit CounterRng(uint64_t key) : key_(key) {}

  static uint64_t mix(uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
  }

  /// Folds a list of parts into one key.
  static uint64_t derive_key(std::initializer_list<uint64_t> parts) {
    uint64_t k = 0x6A09E667F3BCC909ULL;
    for (uint64_t p : parts) k = mix(k ^ mix(p));
    return k;
  }

  /// Independent substream; does not advance this stream.
  CounterRng fork(uint64_t salt) const { return CounterRng(derive_key({key_, salt})); }

  uint64_t next_u64() { return mix(key_ + 0x9E3779B97F4A7C15ULL * ++counter_); }

  /// Uniform in [0, 1).
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in [0, n).
  int uniform_int(int n) { return int(next_u64() % uint64_t(n)); }

  bool bernoulli(double p) { return uniform() < p; }

  /// Standard normal via Box-Muller (no cached spare: one call, two uniforms).
  double normal() {
    double u1 = uniform(), u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  double exponential(double mean) {
    double u = uniform();
    while (u <= 0.0) u = uniform();
    return -mean * std::log(u);
  }

  /// Poisson: Knuth multiplication for small means, normal approximation above.
  int poisson(double mean) {
    if (mean <= 0.0) return 0;
    if (mean < 30.0) {
      double limit = std::exp(-mean), prod = uniform();
      int n = 0;
      while (prod > limit) {
        prod *= uniform();
        ++n;
      }
      return n;
    }
    double x = mean + std::sqrt(mean) * normal();
    return x < 0.0 ? 0 : int(std::lround(x));
  }

  /// Draws an index from a discrete distribution given its cumulative sums.
  template <class V>
  int categorical_from_cdf(const V& cdf) {
    double u = uniform();
    int n = int(cdf.size());
    for (int i = 0; i < n; ++i)
      if (u < cdf[i]) return i;
    return n - 1;
  }

  uint64_t key() const { return key_; }
  uint64_t counter() const { return counter_; }
  void set_counter(uint64_t c) { counter_ = c; }

 private:
  uint64_t key_;
  uint64_t counter_ = 0;
};

}  // namespace userbert
