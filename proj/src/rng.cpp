#include "cdptwin/rng.hpp"

#include <cmath>

#include "cdptwin/error.hpp"

namespace cdptwin {
namespace {

constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag, std::uint64_t index) {
  std::uint64_t key = mix64(seed + kGamma);
  key = mix64(key ^ fnv1a(tag));
  key = mix64(key ^ (index * kGamma + 0x632BE59BD9B4E019ULL));
  return key;
}

Rng::result_type Rng::operator()() {
  state_ += kGamma;
  return mix64(state_);
}

double Rng::uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u = 0.0;
  double v = 0.0;
  double s = 0.0;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double factor = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * factor;
  has_spare_ = true;
  return u * factor;
}

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound == 0) throw ParameterError("Rng::below: bound must be positive");
  // Rejection on the top of the range keeps the result unbiased.
  const std::uint64_t limit = max() - max() % bound;
  std::uint64_t draw = 0;
  do {
    draw = (*this)();
  } while (draw >= limit);
  return draw % bound;
}

}  // namespace cdptwin
