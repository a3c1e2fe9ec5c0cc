#include "cdptwin/cli/commands.hpp"

#include <algorithm>
#include <set>
#include <string>

#include "cdptwin/cli/dataset.hpp"
#include "cdptwin/error.hpp"
#include "cdptwin/fileio.hpp"
#include "cdptwin/pgm.hpp"
#include "cdptwin/rng.hpp"
#include "fmt/format.h"
#include "json.hpp"

namespace cdptwin::cli {

using ordered_json = nlohmann::ordered_json;

namespace {

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir.string());
}

void make_parent(const fs::path& file) {
  if (file.has_parent_path()) make_dir(file.parent_path());
}

/// Provenance copy of the effective configuration.
void write_config_copy(const fs::path& path, const RunConfig& config) { write_file_atomic(path, to_json(config)); }

fs::path sidecar(const fs::path& path, const std::string& suffix) {
  fs::path out = path;
  out += suffix;
  return out;
}

[[noreturn]] void throw_missing(const std::vector<std::string>& problems) {
  std::string message = fmt::format("{} missing or mismatched input(s):", problems.size());
  for (const auto& p : problems) message += "\n  " + p;
  throw IoError(message);
}

const fs::path& first_file(const DatasetItem& item) { return item.files.front().second; }

std::vector<channel::TemplateImagePair> load_pairs(const fs::path& templates_dir, const fs::path& images_dir) {
  const auto templates = scan_dataset(templates_dir);
  const auto images = scan_dataset(images_dir);
  std::vector<std::string> problems;
  for (const auto& [id, item] : templates) {
    if (!images.count(id)) problems.push_back("no acquisition for template '" + id + "' in " + images_dir.string());
  }
  if (templates.empty()) problems.push_back("no templates in " + templates_dir.string());
  if (!problems.empty()) throw_missing(problems);

  std::vector<channel::TemplateImagePair> pairs;
  for (const auto& [id, item] : templates) {
    const BinaryTemplate z = read_template(first_file(item));
    for (const auto& [n, path] : images.at(id).files) pairs.push_back({z, read_pgm(path).image});
  }
  return pairs;
}

channel::ChannelModel resolve_channel(const RunConfig& config) {
  if (!config.channel.model_path.empty()) return channel::load_model(config.channel.model_path);
  return channel::reference_channel(config.channel.reference);
}

void write_stack(const fs::path& out_dir, const std::string& id, const RealizationStack& stack, int bit_depth) {
  for (std::size_t r = 0; r < stack.k(); ++r) write_pgm(out_dir / realization_name(id, r + 1), stack[r], bit_depth);
}

}  // namespace

std::string cmd_gen(const RunConfig& config, std::size_t count, const fs::path& out_dir) {
  validate(config);
  make_dir(out_dir);
  ordered_json files = ordered_json::array();
  for (std::size_t i = 0; i < count; ++i) {
    const std::string id = fmt::format("t{:04d}", i);
    const auto z = generate_template(config.templ.width, config.templ.height, config.templ.density,
                                     derive_seed(config.seed, "gen", i));
    write_pgm(out_dir / (id + ".pgm"), z);
    files.push_back(id + ".pgm");
  }
  const ordered_json manifest{{"seed", config.seed},
                              {"density", config.templ.density},
                              {"width", config.templ.width},
                              {"height", config.templ.height},
                              {"scale", config.templ.scale},
                              {"count", count},
                              {"files", files}};
  write_file_atomic(out_dir / "manifest.json", manifest.dump(2) + "\n");
  write_config_copy(out_dir / "config.json", config);
  return fmt::format("gen: wrote {} templates ({}x{}, density {}) to {}", count, config.templ.width,
                     config.templ.height, config.templ.density, out_dir.string());
}

std::string cmd_fit(const RunConfig& config, const fs::path& templates_dir, const fs::path& images_dir,
                    channel::Direction direction, const fs::path& model_out) {
  validate(config);
  const auto pairs = load_pairs(templates_dir, images_dir);
  const auto model = channel::fit_channel(pairs, direction, config.templ.scale, config.channel.fit_target);
  make_parent(model_out);
  channel::save_model(model_out, model);
  write_config_copy(sidecar(model_out, ".config.json"), config);
  return fmt::format("fit: {} model from {} pairs, {} of 512 patterns observed -> {}", channel::to_string(direction),
                     pairs.size(), model.table().observed_count(), model_out.string());
}

std::string cmd_print(const RunConfig& config, const fs::path& templates_dir, const fs::path& out_dir, std::size_t k) {
  validate(config);
  if (k < 1) throw ParameterError("--k must be >= 1");
  const auto model = resolve_channel(config);
  if (model.direction() != channel::Direction::print) throw UsageError("print needs a print-direction channel model");
  const auto templates = scan_dataset(templates_dir);
  if (templates.empty()) throw_missing({"no templates in " + templates_dir.string()});
  std::vector<std::pair<std::string, BinaryTemplate>> inputs;
  for (const auto& [id, item] : templates) inputs.emplace_back(id, read_template(first_file(item)));

  make_dir(out_dir);
  for (const auto& [id, z] : inputs) {
    const auto stack = channel::simulate_print(model, z, k, derive_seed(config.seed, "print/" + id, 0));
    write_stack(out_dir, id, stack, config.bit_depth);
  }
  write_config_copy(out_dir / "config.json", config);
  return fmt::format("print: {} templates x {} realizations -> {}", inputs.size(), k, out_dir.string());
}

std::string cmd_estimate(const RunConfig& config, const fs::path& images_dir, const fs::path& out_dir, std::size_t k) {
  validate(config);
  if (k < 1) throw ParameterError("--k must be >= 1");
  const auto model = resolve_channel(config);
  if (model.direction() != channel::Direction::estimate) throw UsageError("estimate needs an estimate-direction channel model");
  const auto images = scan_dataset(images_dir);
  if (images.empty()) throw_missing({"no images in " + images_dir.string()});
  std::vector<std::pair<std::string, GrayImage>> inputs;
  for (const auto& [id, item] : images) inputs.emplace_back(id, read_pgm(first_file(item)).image);

  make_dir(out_dir);
  for (const auto& [id, x] : inputs) {
    const auto stack = channel::estimate_template(model, x, k, derive_seed(config.seed, "estimate/" + id, 0));
    write_stack(out_dir, id, stack, config.bit_depth);
  }
  write_config_copy(out_dir / "config.json", config);
  return fmt::format("estimate: {} images x {} realizations -> {}", inputs.size(), k, out_dir.string());
}

namespace {

std::vector<ddpm::DenoiserPair> load_denoiser_pairs(const fs::path& conditions_dir, const fs::path& targets_dir) {
  const auto conditions = scan_dataset(conditions_dir);
  const auto targets = scan_dataset(targets_dir);
  std::vector<std::string> problems;
  for (const auto& [id, item] : conditions) {
    if (!targets.count(id)) problems.push_back("no target for condition '" + id + "' in " + targets_dir.string());
  }
  if (conditions.empty()) problems.push_back("no conditions in " + conditions_dir.string());
  if (!problems.empty()) throw_missing(problems);

  std::vector<ddpm::DenoiserPair> pairs;
  for (const auto& [id, item] : conditions) {
    const GrayImage condition = read_pgm(first_file(item)).image;
    const GrayImage target = read_pgm(first_file(targets.at(id))).image;
    pairs.push_back({match_geometry(condition, target.width(), target.height()), target});
  }
  return pairs;
}

}  // namespace

std::string cmd_ddpm_fit(const RunConfig& config, const fs::path& conditions_dir, const fs::path& targets_dir,
                         const fs::path& denoiser_out) {
  validate(config);
  const auto pairs = load_denoiser_pairs(conditions_dir, targets_dir);
  const auto schedule = config.ddpm.train.build();
  ddpm::LinearFitOptions options;
  options.buckets = config.denoiser.buckets;
  options.patch_radius = config.denoiser.patch_radius;
  options.samples_per_pair = config.ddpm.samples_per_pair;
  options.seed = derive_seed(config.seed, "ddpm-fit", 0);
  const auto denoiser = ddpm::fit_linear_denoiser(pairs, schedule, options);

  double fitted = 0.0;
  double zero = 0.0;
  const ddpm::ZeroDenoiser baseline;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto seed = derive_seed(config.seed, "ddpm-heldout", i);
    fitted += ddpm::ddpm_loss(denoiser, pairs[i].target, pairs[i].condition, schedule, config.ddpm.loss_batch, seed);
    zero += ddpm::ddpm_loss(baseline, pairs[i].target, pairs[i].condition, schedule, config.ddpm.loss_batch, seed);
  }
  fitted /= static_cast<double>(pairs.size());
  zero /= static_cast<double>(pairs.size());
  if (!(fitted < zero)) {
    throw NumericalError(fmt::format("ddpm-fit: fitted loss {:.6g} does not beat the zero denoiser ({:.6g})", fitted, zero));
  }
  make_parent(denoiser_out);
  ddpm::save_denoiser(denoiser_out, denoiser);
  write_config_copy(sidecar(denoiser_out, ".config.json"), config);
  return fmt::format("ddpm-fit: {} pairs, held-out loss {:.6g} vs zero-denoiser {:.6g}{} -> {}", pairs.size(), fitted,
                     zero, denoiser.regularized() ? " (ridge-regularized)" : "", denoiser_out.string());
}

std::string cmd_ddpm_sample(const RunConfig& config, const fs::path& denoiser_path, const fs::path& conditions_dir,
                            const fs::path& out_dir, std::size_t k, channel::Direction direction) {
  validate(config);
  if (k < 1) throw ParameterError("--k must be >= 1");
  const auto denoiser = ddpm::load_denoiser(denoiser_path);
  const auto schedule = config.ddpm.refine.build();
  const auto conditions = scan_dataset(conditions_dir);
  if (conditions.empty()) throw_missing({"no conditions in " + conditions_dir.string()});

  const int s = config.templ.scale;
  std::vector<std::pair<std::string, GrayImage>> inputs;
  for (const auto& [id, item] : conditions) {
    const GrayImage raw = read_pgm(first_file(item)).image;
    if (direction == channel::Direction::print) {
      inputs.emplace_back(id, match_geometry(raw, raw.width() * s, raw.height() * s));
    } else {
      inputs.emplace_back(id, match_geometry(raw, raw.width() / s, raw.height() / s));
    }
  }

  make_dir(out_dir);
  for (const auto& [id, condition] : inputs) {
    const auto stack = ddpm::sample_stack(denoiser, condition, schedule, k, derive_seed(config.seed, "ddpm-sample/" + id, 0),
                                          config.ddpm.variance);
    write_stack(out_dir, id, stack, config.bit_depth);
  }
  write_config_copy(out_dir / "config.json", config);
  return fmt::format("ddpm-sample: {} conditions x {} realizations ({} refinement steps) -> {}", inputs.size(), k,
                     schedule.steps(), out_dir.string());
}

namespace {

std::string report_row(const metrics::MetricReport& r) {
  return fmt::format("{},{:.9g},{:.9g},{:.9g},{:.9g},{:.9g}\n", r.model, r.pfid_x2z, r.hamming, r.pfid_z2x, r.mse, r.ssim);
}

void require_subdir(const fs::path& dir, const std::string& what, std::vector<std::string>& problems) {
  if (!fs::is_directory(dir)) problems.push_back("missing " + what + " directory " + dir.string());
}

}  // namespace

std::string cmd_eval(const RunConfig& config, const fs::path& ref_dir, const std::vector<ModelDir>& models,
                     const fs::path& report_path, const std::optional<fs::path>& turbo_report) {
  validate(config);
  std::vector<std::string> problems;
  require_subdir(ref_dir / "z", "reference template", problems);
  require_subdir(ref_dir / "x", "reference image", problems);
  std::set<std::string> names;
  for (const auto& m : models) {
    if (m.name.empty() || m.name.find_first_of(",\n\"") != std::string::npos) {
      problems.push_back("invalid model name '" + m.name + "'");
    }
    if (!names.insert(m.name).second) problems.push_back("duplicate model name '" + m.name + "'");
    require_subdir(m.dir / "z", "estimate (z~) for model " + m.name, problems);
    require_subdir(m.dir / "x", "generated image (x~) for model " + m.name, problems);
  }
  if (!problems.empty()) throw_missing(problems);

  const auto ref_z = scan_dataset(ref_dir / "z");
  const auto ref_x = scan_dataset(ref_dir / "x");
  if (ref_z.empty()) problems.push_back("no reference templates in " + (ref_dir / "z").string());
  for (const auto& [id, item] : ref_z) {
    if (!ref_x.count(id)) problems.push_back("reference image missing for '" + id + "'");
  }
  struct ModelData {
    std::map<std::string, DatasetItem> z, x, z_hat, x_hat;
    bool has_reconstructions = false;
  };
  std::vector<ModelData> data;
  for (const auto& m : models) {
    ModelData d;
    d.z = scan_dataset(m.dir / "z");
    d.x = scan_dataset(m.dir / "x");
    d.has_reconstructions = turbo_report && fs::is_directory(m.dir / "z_hat") && fs::is_directory(m.dir / "x_hat");
    if (d.has_reconstructions) {
      d.z_hat = scan_dataset(m.dir / "z_hat");
      d.x_hat = scan_dataset(m.dir / "x_hat");
    }
    for (const auto& [id, item] : ref_z) {
      if (!d.z.count(id)) problems.push_back("model " + m.name + ": estimate z~ missing for '" + id + "'");
      if (!d.x.count(id)) problems.push_back("model " + m.name + ": generated x~ missing for '" + id + "'");
      if (d.has_reconstructions) {
        if (!d.z_hat.count(id)) problems.push_back("model " + m.name + ": reconstruction z^ missing for '" + id + "'");
        if (!d.x_hat.count(id)) problems.push_back("model " + m.name + ": reconstruction x^ missing for '" + id + "'");
      }
    }
    data.push_back(std::move(d));
  }
  if (!problems.empty()) throw_missing(problems);

  std::vector<BinaryTemplate> zs;
  std::vector<GrayImage> xs;
  for (const auto& [id, item] : ref_z) {
    zs.push_back(read_template(first_file(item)));
    xs.push_back(read_pgm(first_file(ref_x.at(id))).image);
  }

  auto collapse = [&](const DatasetItem& item, int width, int height) {
    const auto stack = read_stack(item);
    const GrayImage merged = stack.k() == 1 ? stack[0] : analysis::aggregate(stack, config.aggregation.eval_mode);
    return match_geometry(merged, width, height);
  };

  std::string csv = "model,pfid_x2z,hamming,pfid_z2x,mse,ssim\n";
  {
    metrics::EvaluationSet wo;
    wo.z = zs;
    wo.x = xs;
    for (std::size_t i = 0; i < zs.size(); ++i) {
      wo.z_tilde.push_back(match_geometry(xs[i], zs[i].width(), zs[i].height()));
      wo.x_tilde.push_back(match_geometry(zs[i].to_gray(), xs[i].width(), xs[i].height()));
    }
    csv += report_row(metrics::evaluate("W/O processing", wo, config.metrics));
  }

  std::string turbo_csv = turbo::breakdown_csv_header();
  for (std::size_t m = 0; m < models.size(); ++m) {
    metrics::EvaluationSet set;
    set.z = zs;
    set.x = xs;
    turbo::LossBreakdown mean_breakdown;
    std::size_t i = 0;
    for (const auto& [id, item] : ref_z) {
      set.z_tilde.push_back(collapse(data[m].z.at(id), zs[i].width(), zs[i].height()));
      set.x_tilde.push_back(collapse(data[m].x.at(id), xs[i].width(), xs[i].height()));
      if (data[m].has_reconstructions) {
        const turbo::TurboTuple tuple{zs[i].to_gray(),
                                      collapse(data[m].z_hat.at(id), zs[i].width(), zs[i].height()),
                                      set.z_tilde.back(),
                                      xs[i],
                                      collapse(data[m].x_hat.at(id), xs[i].width(), xs[i].height()),
                                      set.x_tilde.back()};
        const auto b = turbo::turbo_loss_unet(tuple, config.turbo);
        mean_breakdown.l_z_tilde += b.l_z_tilde;
        mean_breakdown.l_x_hat += b.l_x_hat;
        mean_breakdown.l_x_tilde += b.l_x_tilde;
        mean_breakdown.l_z_hat += b.l_z_hat;
      }
      ++i;
    }
    csv += report_row(metrics::evaluate(models[m].name, set, config.metrics));
    if (data[m].has_reconstructions) {
      const double n = static_cast<double>(zs.size());
      mean_breakdown.l_z_tilde /= n;
      mean_breakdown.l_x_hat /= n;
      mean_breakdown.l_x_tilde /= n;
      mean_breakdown.l_z_hat /= n;
      turbo_csv += turbo::breakdown_csv_row(models[m].name, turbo::compose(mean_breakdown, config.turbo));
    }
  }

  const auto& s = config.metrics.ssim;
  const ordered_json meta{
      {"columns", "model,pfid_x2z,hamming,pfid_z2x,mse,ssim"},
      {"pfid", {{"features", "patch intensity histograms (not Inception features)"},
                {"patch", config.metrics.feature_patch},
                {"bins", config.metrics.feature_bins}}},
      {"ssim", {{"window", s.window}, {"sigma", s.sigma}, {"k1", s.k1}, {"k2", s.k2}, {"L", s.dynamic_range}}},
      {"binarization", config.metrics.binarization == metrics::Binarization::otsu ? "otsu" : "fixed"},
      {"otsu_bins", config.metrics.otsu_bins},
      {"aggregation", analysis::to_string(config.aggregation.eval_mode)},
      {"wo_processing", "z~ = x, x~ = z"},
      {"items", zs.size()},
  };
  make_parent(report_path);
  write_file_atomic(report_path, csv);
  write_file_atomic(sidecar(report_path, ".meta.json"), meta.dump(2) + "\n");
  write_config_copy(sidecar(report_path, ".config.json"), config);
  if (turbo_report) {
    make_parent(*turbo_report);
    write_file_atomic(*turbo_report, turbo_csv);
  }
  return fmt::format("eval: {} items, {} model rows + W/O processing -> {}", zs.size(), models.size(), report_path.string());
}

std::string cmd_analyze_patterns(const RunConfig& config, const fs::path& templates_dir, const fs::path& images_dir,
                                 const fs::path& csv_out) {
  validate(config);
  const auto pairs = load_pairs(templates_dir, images_dir);
  const auto table = analysis::std_per_pattern(pairs, config.templ.scale);
  make_parent(csv_out);
  write_file_atomic(csv_out, analysis::pattern_table_csv(table));
  return fmt::format("analyze patterns: {} pairs, {} of 512 patterns observed -> {}", pairs.size(),
                     table.observed_count(), csv_out.string());
}

std::string cmd_analyze_stdmap(const RunConfig& config, const fs::path& stacks_dir, const fs::path& out_dir) {
  validate(config);
  const auto items = scan_dataset(stacks_dir);
  std::vector<std::string> problems;
  for (const auto& [id, item] : items) {
    if (item.files.size() < 2) problems.push_back("'" + id + "' has fewer than two realizations");
  }
  if (items.empty()) problems.push_back("no stacks in " + stacks_dir.string());
  if (!problems.empty()) throw_missing(problems);

  make_dir(out_dir);
  for (const auto& [id, item] : items) {
    const Field map = analysis::std_map(read_stack(item));
    const auto [lo, hi] = std::minmax_element(map.values().begin(), map.values().end());
    const double min = *lo;
    const double max = *hi;
    Field scaled(map.width(), map.height(), 0.0);
    if (max > min) {
      for (std::size_t i = 0; i < map.size(); ++i) scaled.values()[i] = (map.values()[i] - min) / (max - min);
    }
    write_pgm(out_dir / (id + "_std.pgm"), GrayImage::clamped(std::move(scaled)), 16);
    const ordered_json side{{"id", id}, {"k", item.files.size()}, {"min", min}, {"max", max},
                            {"std_convention", "population"}, {"encoding", "16-bit, value = min + pixel * (max - min)"}};
    write_file_atomic(out_dir / (id + "_std.json"), side.dump(2) + "\n");
  }
  write_config_copy(out_dir / "config.json", config);
  return fmt::format("analyze stdmap: {} std maps -> {}", items.size(), out_dir.string());
}

std::string cmd_analyze_ksweep(const RunConfig& config, const fs::path& stacks_dir, const fs::path& reference_dir,
                               const std::vector<analysis::Metric>& metric_list, const fs::path& csv_out) {
  validate(config);
  if (metric_list.empty()) throw ParameterError("ksweep needs at least one metric");
  const auto stacks = scan_dataset(stacks_dir);
  const auto refs = scan_dataset(reference_dir);
  const std::size_t max_k = config.aggregation.ks.back();
  std::vector<std::string> problems;
  for (const auto& [id, item] : stacks) {
    if (!refs.count(id)) problems.push_back("no reference for '" + id + "'");
  }
  if (stacks.empty()) problems.push_back("no stacks in " + stacks_dir.string());
  if (!problems.empty()) throw_missing(problems);
  for (const auto& [id, item] : stacks) {
    if (item.files.size() < max_k) {
      throw ParameterError(fmt::format("'{}' has {} realizations but ks reaches {}", id, item.files.size(), max_k));
    }
  }

  std::vector<analysis::KSweepCurve> total;
  for (const auto& [id, item] : stacks) {
    const auto stack = read_stack(item);
    const GrayImage reference = match_geometry(read_pgm(first_file(refs.at(id))).image, stack.width(), stack.height());
    auto curves = analysis::k_sweep(stack, reference, metric_list, config.aggregation.ks, config.aggregation.modes,
                                    config.metrics);
    if (total.empty()) {
      total = std::move(curves);
    } else {
      for (std::size_t c = 0; c < total.size(); ++c) {
        for (std::size_t i = 0; i < total[c].scores.size(); ++i) total[c].scores[i] += curves[c].scores[i];
      }
    }
  }
  for (auto& curve : total) {
    for (double& v : curve.scores) v /= static_cast<double>(stacks.size());
  }
  make_parent(csv_out);
  write_file_atomic(csv_out, analysis::k_sweep_csv(total));
  return fmt::format("analyze ksweep: {} stacks, {} curves -> {}", stacks.size(), total.size(), csv_out.string());
}

std::string cmd_analyze_bitflip(const RunConfig& config, const fs::path& templates_dir, const fs::path& real_dir,
                                const std::optional<fs::path>& synthetic_dir, const fs::path& out_dir) {
  validate(config);
  const auto real_pairs = load_pairs(templates_dir, real_dir);
  std::vector<channel::TemplateImagePair> synthetic_pairs;
  if (synthetic_dir) synthetic_pairs = load_pairs(templates_dir, *synthetic_dir);

  const auto real = analysis::bit_flip_probability(real_pairs, config.templ.scale);
  make_dir(out_dir);
  write_file_atomic(out_dir / "real.csv", analysis::pattern_table_csv(real));
  if (!synthetic_dir) {
    return fmt::format("analyze bitflip: {} real pairs, {} patterns observed -> {}", real_pairs.size(),
                       real.observed_count(), out_dir.string());
  }
  const auto synthetic = analysis::bit_flip_probability(synthetic_pairs, config.templ.scale);
  write_file_atomic(out_dir / "synthetic.csv", analysis::pattern_table_csv(synthetic));
  const double r = analysis::table_pearson(real, synthetic, analysis::TableField::flip_prob);
  return fmt::format("analyze bitflip: pearson(real, synthetic flip_prob) = {:.6f} over patterns observed in both -> {}", r,
                     out_dir.string());
}

}  // namespace cdptwin::cli
