#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cdptwin/imaging.hpp"
#include "cdptwin/metrics.hpp"

namespace cdptwin::channel {

inline constexpr int kPatternCount = 512;

/// Index of a 3x3 binary neighborhood. The neighborhood is flattened
/// row-major with the top-left bit most significant, so the center bit alone
/// is 16 and the all-ones neighborhood is 511.
class PatternId {
 public:
  constexpr PatternId() = default;
  /// Throws DomainError outside [0, 511].
  explicit PatternId(int value);

  constexpr int value() const noexcept { return value_; }
  constexpr std::uint8_t center_bit() const noexcept { return static_cast<std::uint8_t>((value_ >> 4) & 1); }

  auto operator<=>(const PatternId&) const = default;

 private:
  int value_ = 0;
};

/// True when (row, col) has a full 3x3 neighborhood inside the grid.
bool is_interior(const BinaryTemplate& bits, int row, int col) noexcept;

/// Throws DomainError for border coordinates.
PatternId extract_pattern(const BinaryTemplate& bits, int row, int col);

/// Inverse of extract_pattern: the nine bits of a pattern, row-major.
std::array<std::uint8_t, 9> pattern_bits(PatternId id);

struct PatternStats {
  std::size_t count = 0;
  double mean = 0.0;
  double std = 0.0;
  double flip_prob = 0.0;

  bool observed() const noexcept { return count > 0; }

  bool operator==(const PatternStats&) const = default;
};

class PatternTable {
 public:
  PatternStats& operator[](PatternId id) { return entries_[static_cast<std::size_t>(id.value())]; }
  const PatternStats& operator[](PatternId id) const { return entries_[static_cast<std::size_t>(id.value())]; }

  std::span<PatternStats, kPatternCount> entries() noexcept { return entries_; }
  std::span<const PatternStats, kPatternCount> entries() const noexcept { return entries_; }

  std::size_t observed_count() const noexcept;

  bool operator==(const PatternTable&) const = default;

 private:
  std::array<PatternStats, kPatternCount> entries_{};
};

enum class Direction { print, estimate };
/// Which output pixels of a scale x scale block are observations of the
/// governing pattern: the block center only, or all of them.
enum class FitTarget { center, block };
enum class SamplingLaw { gaussian_clipped };
/// fitted: estimated from data; reference: built from closed-form parameters.
enum class ModelSource { fitted, reference };

std::string_view to_string(Direction d);
std::string_view to_string(FitTarget t);
Direction parse_direction(std::string_view text);
FitTarget parse_fit_target(std::string_view text);

struct GlobalStats {
  double mean = 0.0;
  double std = 0.0;

  bool operator==(const GlobalStats&) const = default;
};

/// Pattern-conditioned stochastic channel. Every output pixel governed by a
/// conditioning pixel with pattern w is drawn from Normal(mean(w), std(w)^2)
/// clipped to [0,1]. Border pixels use the global (mean, std).
///
/// print:    template z (W x H) -> image x (sW x sH), conditioned on z.
/// estimate: image x (sW x sH) -> template estimate z~ (W x H), conditioned on
///           the Otsu-binarized block-mean downscale of x.
class ChannelModel {
 public:
  ChannelModel(Direction direction, int scale, PatternTable table, GlobalStats global,
               FitTarget target = FitTarget::center, ModelSource source = ModelSource::fitted);

  Direction direction() const noexcept { return direction_; }
  int scale() const noexcept { return scale_; }
  SamplingLaw sampling_law() const noexcept { return SamplingLaw::gaussian_clipped; }
  FitTarget fit_target() const noexcept { return target_; }
  ModelSource source() const noexcept { return source_; }
  const PatternTable& table() const noexcept { return table_; }
  const GlobalStats& global() const noexcept { return global_; }

  bool operator==(const ChannelModel&) const = default;

 private:
  Direction direction_;
  int scale_;
  PatternTable table_;
  GlobalStats global_;
  FitTarget target_;
  ModelSource source_;
};

/// A digital template and one acquisition of it.
struct TemplateImagePair {
  BinaryTemplate z;
  GrayImage x;
};

/// One interior conditioning pixel and one output value it governs.
struct Observation {
  PatternId pattern;
  std::uint8_t center_bit = 0;
  double value = 0.0;
  /// The output value after Otsu binarization of the whole output image.
  std::uint8_t output_bit = 0;
};

/// Conditioning grid of the estimate direction: Otsu binarization of the
/// block-mean downscale of x.
BinaryTemplate estimate_conditioning(const GrayImage& x, int scale, int otsu_bins = 256);

/// Visits every observation in (conditioning, output), row-major over the
/// conditioning grid. `output` must be `scale` times the conditioning size.
void for_each_observation(const BinaryTemplate& conditioning, const GrayImage& output, int scale,
                          FitTarget target, const std::function<void(const Observation&)>& visit,
                          int otsu_bins = 256);

/// Visits the observations of a (z, x) pair as seen by the given direction.
void for_each_observation(const TemplateImagePair& pair, Direction direction, int scale, FitTarget target,
                          const std::function<void(const Observation&)>& visit, int otsu_bins = 256);

struct Tabulation {
  /// Unobserved entries are all zero.
  PatternTable table;
  GlobalStats global;
  double global_flip_prob = 0.0;
  std::size_t observations = 0;
};

/// Per-pattern count, mean, population std and bit-flip probability over all
/// observations in `pairs`.
Tabulation tabulate(std::span<const TemplateImagePair> pairs, Direction direction, int scale,
                    FitTarget target = FitTarget::center);

/// Fits the channel statistics. Unobserved patterns keep count 0 and take the
/// global mean, std and flip probability.
ChannelModel fit_channel(std::span<const TemplateImagePair> pairs, Direction direction, int scale,
                         FitTarget target = FitTarget::center);

/// K synthetic acquisitions of template `z`. Realization r uses the stream
/// (seed, "simulate_print", r).
RealizationStack simulate_print(const ChannelModel& model, const BinaryTemplate& z, std::size_t k,
                                std::uint64_t seed);

/// K continuous template estimates z~ from acquisition `x`.
RealizationStack estimate_template(const ChannelModel& model, const GrayImage& x, std::size_t k,
                                   std::uint64_t seed);

/// Closed-form dot-gain channel used as synthetic ground truth. Bit 1 is
/// bare paper, bit 0 is ink. Ink spreads into white pixels through their edge
/// and diagonal neighbors; white neighbors lighten an inked pixel; noise grows
/// with the number of neighbors that disagree with the center.
struct ReferenceChannelParams {
  Direction direction = Direction::print;
  int scale = 1;
  double paper_level = 0.85;
  double ink_level = 0.15;
  double edge_gain = 0.35;
  double diagonal_gain = 0.15;
  double edge_bleed = 0.10;
  double sigma_base = 0.04;
  double sigma_transition = 0.12;
};

/// Builds the table of a reference channel. Its flip_prob entries are the
/// exact flip probabilities at the midpoint threshold (paper + ink) / 2.
ChannelModel reference_channel(const ReferenceChannelParams& params);

/// Model file: a single JSON document with fixed field order.
std::string to_json(const ChannelModel& model);
ChannelModel channel_from_json(std::string_view text);
void save_model(const std::filesystem::path& path, const ChannelModel& model);
ChannelModel load_model(const std::filesystem::path& path);

}  // namespace cdptwin::channel
