#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "cdptwin/analysis.hpp"
#include "cdptwin/channel.hpp"
#include "cdptwin/ddpm.hpp"
#include "cdptwin/metrics.hpp"
#include "cdptwin/turbo.hpp"

namespace cdptwin::cli {

struct ScheduleConfig {
  double beta_start = 1e-6;
  double beta_end = 0.01;
  int steps = 2000;

  ddpm::NoiseSchedule build() const { return ddpm::linear_schedule(beta_start, beta_end, steps); }
};

/// Everything a command needs besides its I/O paths. Missing JSON fields keep
/// the defaults below; unknown fields are rejected.
struct RunConfig {
  std::uint64_t seed = 0;

  struct Template {
    int width = 228;
    int height = 228;
    double density = 0.5;
    int scale = 1;
  } templ;

  struct Channel {
    /// Empty: print/estimate use the reference channel below.
    std::string model_path;
    channel::ReferenceChannelParams reference;
    channel::FitTarget fit_target = channel::FitTarget::center;
  } channel;

  struct Ddpm {
    ScheduleConfig train{1e-6, 0.01, 2000};
    ScheduleConfig refine{1e-4, 0.09, 1000};
    ddpm::ReverseVariance variance = ddpm::ReverseVariance::posterior;
    std::size_t loss_batch = 36;
    std::size_t samples_per_pair = 16;
  } ddpm;

  struct Denoiser {
    int buckets = 8;
    int patch_radius = 1;
  } denoiser;

  turbo::TurboWeights turbo;
  metrics::MetricSettings metrics;

  struct Aggregation {
    std::size_t k = 21;
    std::vector<analysis::AggregationMode> modes{analysis::AggregationMode::mean, analysis::AggregationMode::median,
                                                 analysis::AggregationMode::mean_of_scores};
    std::vector<std::size_t> ks{1, 3, 7, 21};
    /// How eval collapses a prediction stack before scoring.
    analysis::AggregationMode eval_mode = analysis::AggregationMode::mean;
  } aggregation;

  /// Bit depth of generated PGM images.
  int bit_depth = 16;
};

RunConfig parse_config(std::string_view json_text);
RunConfig load_config(const std::filesystem::path& path);
std::string to_json(const RunConfig& config);

/// Checks every field against the owning module's preconditions. Throws
/// ParameterError naming the first offending field.
void validate(const RunConfig& config);

}  // namespace cdptwin::cli
