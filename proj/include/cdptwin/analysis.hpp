#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cdptwin/channel.hpp"
#include "cdptwin/imaging.hpp"
#include "cdptwin/metrics.hpp"

namespace cdptwin::analysis {

/// Per-pixel population standard deviation across the realizations of a
/// stack. Needs k >= 2.
Field std_map(const RealizationStack& stack);

/// Per-pattern statistics of the central output pixel, pooled over every
/// image acquired (or generated) from `z`. Unobserved patterns have count 0.
channel::PatternTable std_per_pattern(const BinaryTemplate& z, std::span<const GrayImage> images, int scale);
channel::PatternTable std_per_pattern(std::span<const channel::TemplateImagePair> pairs, int scale);

/// Per-pattern probability that the Otsu-binarized central output disagrees
/// with the template's central bit.
channel::PatternTable bit_flip_probability(const BinaryTemplate& z, std::span<const GrayImage> images, int scale);
channel::PatternTable bit_flip_probability(std::span<const channel::TemplateImagePair> pairs, int scale);

enum class TableField { mean, std, flip_prob };

/// Pearson correlation of one field over the patterns observed in both tables.
double table_pearson(const channel::PatternTable& a, const channel::PatternTable& b, TableField field);

enum class AggregationMode { mean, median, mean_of_scores };
std::string_view to_string(AggregationMode mode);
AggregationMode parse_aggregation_mode(std::string_view text);

/// Pixel-wise mean or lower median over the stack. mean_of_scores is a
/// UsageError here: it aggregates scores, not images.
GrayImage aggregate(const RealizationStack& stack, AggregationMode mode);

enum class Metric { mse, ssim, hamming };
std::string_view to_string(Metric metric);
Metric parse_metric(std::string_view text);

/// Scores one prediction. hamming binarizes the prediction per `settings`
/// and the reference as well unless it is already exactly binary.
double score(Metric metric, const GrayImage& prediction, const GrayImage& reference,
             const metrics::MetricSettings& settings = {});

/// Mean of the per-realization scores.
double mean_of_scores(const RealizationStack& stack, const GrayImage& reference, Metric metric,
                      const metrics::MetricSettings& settings = {});

struct KSweepCurve {
  std::vector<std::size_t> ks;
  std::vector<double> scores;
  Metric metric = Metric::mse;
  AggregationMode mode = AggregationMode::mean;
};

/// One curve per (metric, mode). Score at k uses the first k realizations.
/// `ks` must be strictly increasing with max(ks) <= stack.k().
std::vector<KSweepCurve> k_sweep(const RealizationStack& stack, const GrayImage& reference,
                                 std::span<const Metric> metrics, std::span<const std::size_t> ks,
                                 std::span<const AggregationMode> modes, const metrics::MetricSettings& settings = {});

std::string pattern_table_csv(const channel::PatternTable& table);
std::string k_sweep_csv(std::span<const KSweepCurve> curves);

}  // namespace cdptwin::analysis
