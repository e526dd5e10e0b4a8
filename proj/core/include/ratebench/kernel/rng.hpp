#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "ratebench/kernel/tensor.hpp"

namespace ratebench::kernel {

/// Seeded RNG with hand-rolled transforms. std::mt19937_64 output is pinned
/// by the standard; the distribution adapters in <random> are not, so
/// uniform/normal/bounded are implemented here to keep frozen test values
/// portable across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0,1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Standard normal via Box-Muller (one draw per call, no caching, so the
  /// stream position depends only on the call count).
  double normal() {
    double u1 = uniform01();
    while (u1 == 0.0) u1 = uniform01();
    double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  /// Uniform integer in [0, n) by rejection, no modulo bias.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t r = engine_();
    while (r >= limit) r = engine_();
    return r % n;
  }

  void fill_uniform(Tensor& t, double lo, double hi) {
    for (double& v : t.values()) v = uniform(lo, hi);
  }

  void fill_normal(Tensor& t, double mean, double sd) {
    for (double& v : t.values()) v = normal(mean, sd);
  }

  /// In-place Fisher-Yates.
  template <typename Vec>
  void shuffle(Vec& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace ratebench::kernel
