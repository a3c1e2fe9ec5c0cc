#include "cdptwin/channel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cdptwin/error.hpp"
#include "cdptwin/parallel.hpp"
#include "cdptwin/rng.hpp"

namespace cdptwin::channel {

PatternId::PatternId(int value) : value_(value) {
  if (value < 0 || value >= kPatternCount) {
    throw DomainError("pattern id must lie in [0, 511], got " + std::to_string(value));
  }
}

bool is_interior(const BinaryTemplate& bits, int row, int col) noexcept {
  return row >= 1 && col >= 1 && row + 1 < bits.height() && col + 1 < bits.width();
}

PatternId extract_pattern(const BinaryTemplate& bits, int row, int col) {
  if (!is_interior(bits, row, col)) {
    throw DomainError("no full 3x3 neighborhood at (" + std::to_string(row) + ", " + std::to_string(col) + ")");
  }
  int value = 0;
  for (int dr = -1; dr <= 1; ++dr) {
    for (int dc = -1; dc <= 1; ++dc) value = (value << 1) | bits.at(row + dr, col + dc);
  }
  return PatternId(value);
}

std::array<std::uint8_t, 9> pattern_bits(PatternId id) {
  std::array<std::uint8_t, 9> bits{};
  for (int i = 0; i < 9; ++i) bits[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>((id.value() >> (8 - i)) & 1);
  return bits;
}

std::size_t PatternTable::observed_count() const noexcept {
  return static_cast<std::size_t>(std::count_if(entries_.begin(), entries_.end(), [](const PatternStats& s) { return s.observed(); }));
}

std::string_view to_string(Direction d) { return d == Direction::print ? "print" : "estimate"; }
std::string_view to_string(FitTarget t) { return t == FitTarget::center ? "center" : "block"; }

Direction parse_direction(std::string_view text) {
  if (text == "print") return Direction::print;
  if (text == "estimate") return Direction::estimate;
  throw ParameterError("unknown direction '" + std::string(text) + "' (expected print or estimate)");
}

FitTarget parse_fit_target(std::string_view text) {
  if (text == "center") return FitTarget::center;
  if (text == "block") return FitTarget::block;
  throw ParameterError("unknown fit target '" + std::string(text) + "' (expected center or block)");
}

ChannelModel::ChannelModel(Direction direction, int scale, PatternTable table, GlobalStats global, FitTarget target,
                           ModelSource source)
    : direction_(direction), scale_(scale), table_(table), global_(global), target_(target), source_(source) {
  if (scale < 1) throw ParameterError("channel scale must be >= 1, got " + std::to_string(scale));
  auto valid = [](double mean, double std) { return mean >= 0.0 && mean <= 1.0 && std >= 0.0 && std::isfinite(std); };
  if (!valid(global.mean, global.std)) throw ParameterError("channel global statistics out of range");
  for (const auto& e : table_.entries()) {
    if (!valid(e.mean, e.std) || !(e.flip_prob >= 0.0 && e.flip_prob <= 1.0)) {
      throw ParameterError("channel pattern statistics out of range");
    }
  }
}

BinaryTemplate estimate_conditioning(const GrayImage& x, int scale, int otsu_bins) {
  return metrics::otsu_binarize(block_mean_downscale(x, scale), otsu_bins);
}

void for_each_observation(const BinaryTemplate& conditioning, const GrayImage& output, int scale, FitTarget target,
                          const std::function<void(const Observation&)>& visit, int otsu_bins) {
  if (scale < 1) throw ParameterError("scale must be >= 1");
  if (output.width() != conditioning.width() * scale || output.height() != conditioning.height() * scale) {
    throw ParameterError("geometry mismatch: output " + std::to_string(output.width()) + "x" +
                         std::to_string(output.height()) + " is not " + std::to_string(scale) + "x the " +
                         std::to_string(conditioning.width()) + "x" + std::to_string(conditioning.height()) +
                         " conditioning grid");
  }
  const BinaryTemplate output_bits = metrics::otsu_binarize(output, otsu_bins);
  const int half = scale / 2;
  for (int r = 1; r + 1 < conditioning.height(); ++r) {
    for (int c = 1; c + 1 < conditioning.width(); ++c) {
      Observation obs;
      obs.pattern = extract_pattern(conditioning, r, c);
      obs.center_bit = conditioning.at(r, c);
      if (target == FitTarget::center) {
        const int orow = r * scale + half;
        const int ocol = c * scale + half;
        obs.value = output.at(orow, ocol);
        obs.output_bit = output_bits.at(orow, ocol);
        visit(obs);
      } else {
        for (int dr = 0; dr < scale; ++dr) {
          for (int dc = 0; dc < scale; ++dc) {
            obs.value = output.at(r * scale + dr, c * scale + dc);
            obs.output_bit = output_bits.at(r * scale + dr, c * scale + dc);
            visit(obs);
          }
        }
      }
    }
  }
}

void for_each_observation(const TemplateImagePair& pair, Direction direction, int scale, FitTarget target,
                          const std::function<void(const Observation&)>& visit, int otsu_bins) {
  if (direction == Direction::print) {
    for_each_observation(pair.z, pair.x, scale, target, visit, otsu_bins);
    return;
  }
  const BinaryTemplate conditioning = estimate_conditioning(pair.x, scale, otsu_bins);
  if (!conditioning.same_shape(pair.z)) {
    throw ParameterError("geometry mismatch: downscaled image does not match the template");
  }
  for_each_observation(conditioning, pair.z.to_gray(), 1, FitTarget::center, visit, otsu_bins);
}

namespace {

/// Welford running mean / population variance.
struct Moments {
  std::size_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t flips = 0;

  void add(double value, bool flipped) {
    ++count;
    const double delta = value - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (value - mean);
    flips += flipped ? 1U : 0U;
  }

  double std() const { return count > 0 ? std::sqrt(std::max(0.0, m2 / static_cast<double>(count))) : 0.0; }
  double flip_prob() const { return count > 0 ? static_cast<double>(flips) / static_cast<double>(count) : 0.0; }
};

}  // namespace

Tabulation tabulate(std::span<const TemplateImagePair> pairs, Direction direction, int scale, FitTarget target) {
  std::array<Moments, kPatternCount> per_pattern{};
  Moments all;
  for (const auto& pair : pairs) {
    for_each_observation(pair, direction, scale, target, [&](const Observation& obs) {
      const bool flipped = obs.output_bit != obs.center_bit;
      per_pattern[static_cast<std::size_t>(obs.pattern.value())].add(obs.value, flipped);
      all.add(obs.value, flipped);
    });
  }

  Tabulation result;
  for (int p = 0; p < kPatternCount; ++p) {
    const Moments& m = per_pattern[static_cast<std::size_t>(p)];
    auto& entry = result.table[PatternId(p)];
    entry.count = m.count;
    if (m.count > 0) {
      entry.mean = std::clamp(m.mean, 0.0, 1.0);
      entry.std = m.std();
      entry.flip_prob = m.flip_prob();
    }
  }
  result.global = GlobalStats{std::clamp(all.mean, 0.0, 1.0), all.std()};
  result.global_flip_prob = all.flip_prob();
  result.observations = all.count;
  return result;
}

ChannelModel fit_channel(std::span<const TemplateImagePair> pairs, Direction direction, int scale, FitTarget target) {
  if (pairs.empty()) throw ParameterError("fit_channel: no training pairs");
  Tabulation tab = tabulate(pairs, direction, scale, target);
  if (tab.observations == 0) throw ParameterError("fit_channel: templates too small to contain any 3x3 pattern");
  for (auto& entry : tab.table.entries()) {
    if (!entry.observed()) {
      entry.mean = tab.global.mean;
      entry.std = tab.global.std;
      entry.flip_prob = tab.global_flip_prob;
    }
  }
  return ChannelModel(direction, scale, tab.table, tab.global, target, ModelSource::fitted);
}

namespace {

struct PixelLaw {
  double mean;
  double std;
};

Grid<PixelLaw> pixel_laws(const ChannelModel& model, const BinaryTemplate& conditioning) {
  Grid<PixelLaw> laws(conditioning.width(), conditioning.height(), PixelLaw{model.global().mean, model.global().std});
  for (int r = 1; r + 1 < conditioning.height(); ++r) {
    for (int c = 1; c + 1 < conditioning.width(); ++c) {
      const auto& entry = model.table()[extract_pattern(conditioning, r, c)];
      laws.at(r, c) = PixelLaw{entry.mean, entry.std};
    }
  }
  return laws;
}

RealizationStack draw_realizations(const Grid<PixelLaw>& laws, int scale, std::size_t k, std::uint64_t seed,
                                   std::string_view tag) {
  if (k < 1) throw ParameterError("realization count k must be >= 1");
  std::vector<Field> fields(k);
  parallel_for(k, [&](std::size_t index) {
    Rng rng(seed, tag, index);
    Field out(laws.width() * scale, laws.height() * scale);
    for (int r = 0; r < out.height(); ++r) {
      for (int c = 0; c < out.width(); ++c) {
        const PixelLaw& law = laws.at(r / scale, c / scale);
        out.at(r, c) = std::clamp(law.mean + law.std * rng.normal(), 0.0, 1.0);
      }
    }
    fields[index] = std::move(out);
  });
  std::vector<GrayImage> images;
  images.reserve(k);
  for (auto& f : fields) images.emplace_back(std::move(f));
  return RealizationStack(std::move(images));
}

}  // namespace

RealizationStack simulate_print(const ChannelModel& model, const BinaryTemplate& z, std::size_t k, std::uint64_t seed) {
  if (model.direction() != Direction::print) throw UsageError("simulate_print needs a print-direction model");
  return draw_realizations(pixel_laws(model, z), model.scale(), k, seed, "simulate_print");
}

RealizationStack estimate_template(const ChannelModel& model, const GrayImage& x, std::size_t k, std::uint64_t seed) {
  if (model.direction() != Direction::estimate) throw UsageError("estimate_template needs an estimate-direction model");
  const BinaryTemplate conditioning = estimate_conditioning(x, model.scale());
  return draw_realizations(pixel_laws(model, conditioning), 1, k, seed, "estimate_template");
}

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

/// P(clip(N(mean, std^2)) >= threshold) for a threshold inside (0, 1].
double prob_at_least(double mean, double std, double threshold) {
  if (std == 0.0) return mean >= threshold ? 1.0 : 0.0;
  return 1.0 - normal_cdf((threshold - mean) / std);
}

}  // namespace

ChannelModel reference_channel(const ReferenceChannelParams& params) {
  auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!in_unit(params.paper_level) || !in_unit(params.ink_level) || params.paper_level <= params.ink_level) {
    throw ParameterError("reference channel needs 0 <= ink_level < paper_level <= 1");
  }
  if (params.edge_gain < 0.0 || params.diagonal_gain < 0.0 || params.edge_bleed < 0.0 ||
      params.edge_gain + params.diagonal_gain > 1.0 || params.edge_bleed > 1.0) {
    throw ParameterError("reference channel gains must be non-negative with edge_gain + diagonal_gain <= 1 and edge_bleed <= 1");
  }
  if (params.sigma_base < 0.0 || params.sigma_transition < 0.0) {
    throw ParameterError("reference channel noise levels must be non-negative");
  }

  const double contrast = params.paper_level - params.ink_level;
  const double threshold = 0.5 * (params.paper_level + params.ink_level);
  PatternTable table;
  double mean_sum = 0.0;
  double mean_sq_sum = 0.0;
  double var_sum = 0.0;
  for (int p = 0; p < kPatternCount; ++p) {
    const PatternId id(p);
    const auto bits = pattern_bits(id);
    const int center = bits[4];
    const int edge_ones = bits[1] + bits[3] + bits[5] + bits[7];
    const int diagonal_ones = bits[0] + bits[2] + bits[6] + bits[8];
    const int disagreeing = center == 1 ? 8 - (edge_ones + diagonal_ones) : edge_ones + diagonal_ones;

    double mean = 0.0;
    if (center == 1) {
      mean = params.paper_level - contrast * (params.edge_gain * (4 - edge_ones) / 4.0 +
                                              params.diagonal_gain * (4 - diagonal_ones) / 4.0);
    } else {
      mean = params.ink_level + contrast * params.edge_bleed * edge_ones / 4.0;
    }
    const double std = params.sigma_base + params.sigma_transition * disagreeing / 8.0;
    const double above = prob_at_least(mean, std, threshold);

    auto& entry = table[id];
    entry.count = 0;
    entry.mean = mean;
    entry.std = std;
    entry.flip_prob = center == 1 ? 1.0 - above : above;

    mean_sum += mean;
    mean_sq_sum += mean * mean;
    var_sum += std * std;
  }
  const double n = kPatternCount;
  const double global_mean = mean_sum / n;
  // Variance of the equal-weight mixture: mean within-pattern variance plus
  // the variance of the pattern means.
  const double global_var = var_sum / n + std::max(0.0, mean_sq_sum / n - global_mean * global_mean);
  return ChannelModel(params.direction, params.scale, table, GlobalStats{global_mean, std::sqrt(global_var)},
                      FitTarget::center, ModelSource::reference);
}

}  // namespace cdptwin::channel
