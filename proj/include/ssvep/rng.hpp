#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "ssvep/common.hpp"

namespace ssvep {

/// splitmix64 mixing step. Used both as a seed-stream generator and as the
/// hash that derives independent per-trial seeds from one master seed, so
/// parallel trial synthesis does not depend on iteration order.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Derives a child seed from a master seed and a sequence of integer keys.
/// Every key is folded through the full splitmix64 avalanche before the next
/// one enters, so nearby small-integer tuples (subject, frequency, duty,
/// trial) land on unrelated seeds.
template <typename... Keys>
std::uint64_t derive_seed(std::uint64_t master, Keys... keys) {
  const auto mix = [](std::uint64_t v) {
    std::uint64_t s = v;
    return splitmix64(s);
  };
  std::uint64_t h = mix(master);
  ((h = mix(h ^ static_cast<std::uint64_t>(keys))), ...);
  return h;
}

/// Deterministic random stream. Wraps the fully specified mt19937_64 engine
/// and implements the value conversions (uniform double, bounded int,
/// gaussian) by hand, since the std::*_distribution algorithms are
/// implementation-defined and would break bit-reproducibility across
/// standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t bits() { return engine_(); }

  /// Uniform on [0, 1) with 53-bit resolution.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n), rejection-sampled so the result is exact and
  /// stable regardless of how libstdc++/libc++ implement shuffling helpers.
  std::uint64_t uniform_below(std::uint64_t n) {
    detail::require(n > 0, "Rng::uniform_below: n must be positive");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
      v = engine_();
    } while (v >= limit);
    return v % n;
  }

  /// Standard normal deviate via Box-Muller; caches the second value of each
  /// generated pair.
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    // u1 in (0,1] keeps the log finite.
    const double u1 = 1.0 - uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  /// In-place Fisher-Yates shuffle (explicit, not std::shuffle, for
  /// cross-platform determinism).
  template <typename Vec>
  void shuffle(Vec& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace ssvep
