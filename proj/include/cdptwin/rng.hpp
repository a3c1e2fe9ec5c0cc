#pragma once

#include <cstdint>
#include <limits>
#include <string_view>

namespace cdptwin {

/// Mixes (seed, tag, index) into a 64-bit key. Used to give every image,
/// realization and Monte-Carlo draw its own stream, independent of the order
/// in which work is scheduled.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag, std::uint64_t index);

/// Counter-based generator: the n-th output is a fixed bijective mix of
/// key + n * golden-gamma (SplitMix64). All derived quantities (uniforms,
/// normals) are computed with portable arithmetic so streams are
/// reproducible across platforms.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t key) : state_(key) {}
  Rng(std::uint64_t seed, std::string_view tag, std::uint64_t index)
      : state_(derive_seed(seed, tag, index)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal (Marsaglia polar method).
  double normal();
  /// Uniform integer in [0, bound). bound must be positive.
  std::uint64_t below(std::uint64_t bound);

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace cdptwin
