#include "cdptwin/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cdptwin/error.hpp"
#include "fmt/format.h"

namespace cdptwin::analysis {

Field std_map(const RealizationStack& stack) {
  if (stack.k() < 2) throw ParameterError("std_map needs at least two realizations");
  const std::size_t n = stack[0].size();
  const double k = static_cast<double>(stack.k());
  Field out(stack.width(), stack.height(), 0.0);
  auto o = out.values();
  for (std::size_t i = 0; i < n; ++i) {
    double mean = 0.0;
    for (const auto& img : stack.images()) mean += img.pixels()[i];
    mean /= k;
    double ss = 0.0;
    for (const auto& img : stack.images()) {
      const double d = img.pixels()[i] - mean;
      ss += d * d;
    }
    o[i] = std::sqrt(ss / k);
  }
  return out;
}

namespace {

std::vector<channel::TemplateImagePair> pair_up(const BinaryTemplate& z, std::span<const GrayImage> images) {
  std::vector<channel::TemplateImagePair> pairs;
  pairs.reserve(images.size());
  for (const auto& img : images) pairs.push_back({z, img});
  return pairs;
}

}  // namespace

channel::PatternTable std_per_pattern(std::span<const channel::TemplateImagePair> pairs, int scale) {
  return channel::tabulate(pairs, channel::Direction::print, scale).table;
}

channel::PatternTable std_per_pattern(const BinaryTemplate& z, std::span<const GrayImage> images, int scale) {
  const auto pairs = pair_up(z, images);
  return std_per_pattern(pairs, scale);
}

channel::PatternTable bit_flip_probability(std::span<const channel::TemplateImagePair> pairs, int scale) {
  return channel::tabulate(pairs, channel::Direction::print, scale).table;
}

channel::PatternTable bit_flip_probability(const BinaryTemplate& z, std::span<const GrayImage> images, int scale) {
  const auto pairs = pair_up(z, images);
  return bit_flip_probability(pairs, scale);
}

double table_pearson(const channel::PatternTable& a, const channel::PatternTable& b, TableField field) {
  std::vector<double> u;
  std::vector<double> v;
  auto pick = [field](const channel::PatternStats& s) {
    switch (field) {
      case TableField::mean: return s.mean;
      case TableField::std: return s.std;
      case TableField::flip_prob: return s.flip_prob;
    }
    return 0.0;
  };
  for (int p = 0; p < channel::kPatternCount; ++p) {
    const channel::PatternId id(p);
    if (a[id].observed() && b[id].observed()) {
      u.push_back(pick(a[id]));
      v.push_back(pick(b[id]));
    }
  }
  return metrics::pearson(u, v);
}

std::string_view to_string(AggregationMode mode) {
  switch (mode) {
    case AggregationMode::mean: return "mean";
    case AggregationMode::median: return "median";
    case AggregationMode::mean_of_scores: return "mean_of_scores";
  }
  return "";
}

AggregationMode parse_aggregation_mode(std::string_view text) {
  if (text == "mean") return AggregationMode::mean;
  if (text == "median") return AggregationMode::median;
  if (text == "mean_of_scores") return AggregationMode::mean_of_scores;
  throw ParameterError("unknown aggregation mode '" + std::string(text) + "'");
}

GrayImage aggregate(const RealizationStack& stack, AggregationMode mode) {
  if (mode == AggregationMode::mean_of_scores) {
    throw UsageError("mean_of_scores aggregates scores, not images");
  }
  const std::size_t n = stack[0].size();
  Field out(stack.width(), stack.height());
  auto o = out.values();
  std::vector<double> column(stack.k());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t r = 0; r < stack.k(); ++r) column[r] = stack[r].pixels()[i];
    if (mode == AggregationMode::mean) {
      double sum = 0.0;
      for (double v : column) sum += v;
      o[i] = sum / static_cast<double>(column.size());
    } else {
      const std::size_t mid = (column.size() - 1) / 2;
      std::nth_element(column.begin(), column.begin() + static_cast<std::ptrdiff_t>(mid), column.end());
      o[i] = column[mid];
    }
  }
  return GrayImage::clamped(std::move(out));
}

std::string_view to_string(Metric metric) {
  switch (metric) {
    case Metric::mse: return "mse";
    case Metric::ssim: return "ssim";
    case Metric::hamming: return "hamming";
  }
  return "";
}

Metric parse_metric(std::string_view text) {
  if (text == "mse") return Metric::mse;
  if (text == "ssim") return Metric::ssim;
  if (text == "hamming") return Metric::hamming;
  throw ParameterError("unknown metric '" + std::string(text) + "' (expected mse, ssim or hamming)");
}

namespace {

bool is_binary(const GrayImage& img) {
  return std::all_of(img.pixels().begin(), img.pixels().end(), [](double v) { return v == 0.0 || v == 1.0; });
}

}  // namespace

double score(Metric metric, const GrayImage& prediction, const GrayImage& reference,
             const metrics::MetricSettings& settings) {
  switch (metric) {
    case Metric::mse: return metrics::mse(prediction, reference);
    case Metric::ssim: return metrics::ssim(prediction, reference, settings.ssim);
    case Metric::hamming: {
      const BinaryTemplate ref = is_binary(reference) ? BinaryTemplate::from_gray(reference)
                                                      : metrics::binarize(reference, settings);
      return metrics::hamming(metrics::binarize(prediction, settings), ref);
    }
  }
  return 0.0;
}

double mean_of_scores(const RealizationStack& stack, const GrayImage& reference, Metric metric,
                      const metrics::MetricSettings& settings) {
  double sum = 0.0;
  for (const auto& img : stack.images()) sum += score(metric, img, reference, settings);
  return sum / static_cast<double>(stack.k());
}

std::vector<KSweepCurve> k_sweep(const RealizationStack& stack, const GrayImage& reference,
                                 std::span<const Metric> metric_list, std::span<const std::size_t> ks,
                                 std::span<const AggregationMode> modes, const metrics::MetricSettings& settings) {
  if (ks.empty()) throw ParameterError("k_sweep: ks is empty");
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (ks[i] < 1 || (i > 0 && ks[i] <= ks[i - 1])) throw ParameterError("k_sweep: ks must be strictly increasing and >= 1");
  }
  if (ks.back() > stack.k()) {
    throw ParameterError("k_sweep: k = " + std::to_string(ks.back()) + " exceeds the stack size " + std::to_string(stack.k()));
  }

  // Per-realization scores are shared by every mean_of_scores curve.
  std::vector<std::vector<double>> per_realization(metric_list.size());
  const bool wants_scores = std::find(modes.begin(), modes.end(), AggregationMode::mean_of_scores) != modes.end();
  if (wants_scores) {
    for (std::size_t m = 0; m < metric_list.size(); ++m) {
      for (std::size_t r = 0; r < ks.back(); ++r) {
        per_realization[m].push_back(score(metric_list[m], stack[r], reference, settings));
      }
    }
  }

  std::vector<KSweepCurve> curves;
  for (std::size_t m = 0; m < metric_list.size(); ++m) {
    for (AggregationMode mode : modes) {
      KSweepCurve curve;
      curve.metric = metric_list[m];
      curve.mode = mode;
      for (std::size_t k : ks) {
        curve.ks.push_back(k);
        if (mode == AggregationMode::mean_of_scores) {
          double sum = 0.0;
          for (std::size_t r = 0; r < k; ++r) sum += per_realization[m][r];
          curve.scores.push_back(sum / static_cast<double>(k));
        } else {
          curve.scores.push_back(score(metric_list[m], aggregate(stack.prefix(k), mode), reference, settings));
        }
      }
      curves.push_back(std::move(curve));
    }
  }
  return curves;
}

std::string pattern_table_csv(const channel::PatternTable& table) {
  std::string out = "pattern,count,mean,std,flip_prob\n";
  for (int p = 0; p < channel::kPatternCount; ++p) {
    const auto& e = table[channel::PatternId(p)];
    out += fmt::format("{},{},{:.17g},{:.17g},{:.17g}\n", p, e.count, e.mean, e.std, e.flip_prob);
  }
  return out;
}

std::string k_sweep_csv(std::span<const KSweepCurve> curves) {
  std::string out = "k,mode,metric,score\n";
  for (const auto& curve : curves) {
    for (std::size_t i = 0; i < curve.ks.size(); ++i) {
      out += fmt::format("{},{},{},{:.17g}\n", curve.ks[i], to_string(curve.mode), to_string(curve.metric), curve.scores[i]);
    }
  }
  return out;
}

}  // namespace cdptwin::analysis
