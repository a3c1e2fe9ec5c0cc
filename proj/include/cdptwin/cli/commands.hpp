#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cdptwin/cli/config.hpp"

namespace cdptwin::cli {

namespace fs = std::filesystem;

/// Each command validates its inputs before writing anything, writes files
/// atomically, and returns a short human-readable summary.

/// `count` templates `t0000.pgm`, ... plus manifest.json.
std::string cmd_gen(const RunConfig& config, std::size_t count, const fs::path& out_dir);

/// Fits a channel on templates and the acquisitions named after them.
std::string cmd_fit(const RunConfig& config, const fs::path& templates_dir, const fs::path& images_dir,
                    channel::Direction direction, const fs::path& model_out);

/// Writes `<id>_r<n>.pgm`, n = 1..k, for every template. Uses the model at
/// config.channel.model_path, or the configured reference channel.
std::string cmd_print(const RunConfig& config, const fs::path& templates_dir, const fs::path& out_dir, std::size_t k);

/// Template estimates from the first acquisition of every item in images_dir.
std::string cmd_estimate(const RunConfig& config, const fs::path& images_dir, const fs::path& out_dir, std::size_t k);

/// Fits the linear denoiser on (condition, target) pairs matched by id.
/// The condition is resampled to the target geometry.
std::string cmd_ddpm_fit(const RunConfig& config, const fs::path& conditions_dir, const fs::path& targets_dir,
                         const fs::path& denoiser_out);

/// Samples k realizations per condition with the refinement schedule. Outputs
/// have the condition geometry times `scale_up` (print direction) or divided
/// by `scale_down` (estimate direction).
std::string cmd_ddpm_sample(const RunConfig& config, const fs::path& denoiser_path, const fs::path& conditions_dir,
                            const fs::path& out_dir, std::size_t k, channel::Direction direction);

struct ModelDir {
  std::string name;
  fs::path dir;
};

/// Reference: ref_dir/z (templates) and ref_dir/x (acquisitions). Each model
/// directory holds z/ (estimates z~) and x/ (generated x~), one or more
/// realizations per id. The report starts with the W/O-processing row
/// (z~ = x, x~ = z). When `turbo_report` is set, models that also provide
/// z_hat/ and x_hat/ get a loss breakdown row there.
std::string cmd_eval(const RunConfig& config, const fs::path& ref_dir, const std::vector<ModelDir>& models,
                     const fs::path& report_path, const std::optional<fs::path>& turbo_report = std::nullopt);

std::string cmd_analyze_patterns(const RunConfig& config, const fs::path& templates_dir, const fs::path& images_dir,
                                 const fs::path& csv_out);
std::string cmd_analyze_stdmap(const RunConfig& config, const fs::path& stacks_dir, const fs::path& out_dir);
std::string cmd_analyze_ksweep(const RunConfig& config, const fs::path& stacks_dir, const fs::path& reference_dir,
                               const std::vector<analysis::Metric>& metric_list, const fs::path& csv_out);
/// Writes real.csv (and synthetic.csv when given) and reports the Pearson
/// correlation of the two flip-probability curves.
std::string cmd_analyze_bitflip(const RunConfig& config, const fs::path& templates_dir, const fs::path& real_dir,
                                const std::optional<fs::path>& synthetic_dir, const fs::path& out_dir);

}  // namespace cdptwin::cli
