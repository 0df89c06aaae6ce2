#pragma once

// Deterministic random source. The engine (mt19937_64) has fully specified
// output, and the uniform/Gaussian transforms are written out by hand instead
// of going through std:: distributions, whose algorithms are implementation
// defined. Identical seeds therefore give identical streams on every
// platform and standard library.

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "earlyrisk/io.hpp"

namespace earlyrisk {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform double in [0, 1) with 53-bit resolution.
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double next_uniform(double lo, double hi) {
    return lo + (hi - lo) * next_unit();
  }

  // Unbiased integer in [0, n) via rejection sampling. n must be positive.
  std::uint64_t next_below(std::uint64_t n) {
    if (n == 0) {
      throw UsageError("Rng::next_below requires n > 0");
    }
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v = next_u64();
    while (v >= limit) v = next_u64();
    return v % n;
  }

  // Inclusive integer range.
  std::int64_t next_int(std::int64_t lo, std::int64_t hi) {
    if (hi < lo) {
      throw UsageError("Rng::next_int requires lo <= hi");
    }
    return lo + static_cast<std::int64_t>(
                    next_below(static_cast<std::uint64_t>(hi - lo) + 1));
  }

  // Standard normal via Box-Muller; the second value of each pair is cached.
  double next_gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    // 1 - next_unit() lies in (0, 1], keeping the log argument positive.
    const double u1 = 1.0 - next_unit();
    const double u2 = next_unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.141592653589793238462643383279502884 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  // Fisher-Yates shuffle driven by next_below, so the permutation stream is
  // as portable as the engine itself.
  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(next_below(i));
      std::swap(values[i - 1], values[j]);
    }
  }

  // Stable sub-stream seeds: mix a base seed with a stage tag so independent
  // pipeline stages never share a stream by accident.
  static std::uint64_t derive(std::uint64_t base, std::string_view tag) {
    return fnv1a64(tag, fnv1a64_u64(base));
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace earlyrisk
