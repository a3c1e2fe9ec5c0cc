#include "cdptwin/cli/config.hpp"

#include <cmath>
#include <set>
#include <string>

#include "cdptwin/error.hpp"
#include "cdptwin/fileio.hpp"
#include "json.hpp"

namespace cdptwin::cli {

using ordered_json = nlohmann::ordered_json;

namespace {

void reject_unknown(const ordered_json& obj, const std::string& where, std::initializer_list<const char*> known) {
  if (!obj.is_object()) throw ParameterError("config: '" + where + "' must be an object");
  const std::set<std::string> allowed(known.begin(), known.end());
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) throw ParameterError("config: unknown field '" + where + "." + key + "'");
  }
}

template <typename T>
void read(const ordered_json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

void read_schedule(const ordered_json& obj, const std::string& where, ScheduleConfig& out) {
  reject_unknown(obj, where, {"beta_start", "beta_end", "T"});
  read(obj, "beta_start", out.beta_start);
  read(obj, "beta_end", out.beta_end);
  read(obj, "T", out.steps);
}

ordered_json schedule_json(const ScheduleConfig& s) {
  return ordered_json{{"beta_start", s.beta_start}, {"beta_end", s.beta_end}, {"T", s.steps}};
}

}  // namespace

RunConfig parse_config(std::string_view json_text) {
  RunConfig cfg;
  ordered_json doc;
  try {
    doc = ordered_json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParameterError(std::string("config is not valid JSON: ") + e.what());
  }
  try {
    reject_unknown(doc, "config", {"seed", "template", "channel", "ddpm", "denoiser", "turbo", "metrics", "aggregation", "bit_depth"});
    read(doc, "seed", cfg.seed);
    read(doc, "bit_depth", cfg.bit_depth);

    if (doc.contains("template")) {
      const auto& t = doc.at("template");
      reject_unknown(t, "template", {"width", "height", "density", "scale"});
      read(t, "width", cfg.templ.width);
      read(t, "height", cfg.templ.height);
      read(t, "density", cfg.templ.density);
      read(t, "scale", cfg.templ.scale);
    }
    cfg.channel.reference.scale = cfg.templ.scale;

    if (doc.contains("channel")) {
      const auto& c = doc.at("channel");
      reject_unknown(c, "channel", {"model_path", "fit_target", "reference"});
      read(c, "model_path", cfg.channel.model_path);
      if (c.contains("fit_target")) cfg.channel.fit_target = channel::parse_fit_target(c.at("fit_target").get<std::string>());
      if (c.contains("reference")) {
        const auto& r = c.at("reference");
        reject_unknown(r, "channel.reference", {"direction", "paper_level", "ink_level", "edge_gain", "diagonal_gain",
                                                "edge_bleed", "sigma_base", "sigma_transition"});
        auto& ref = cfg.channel.reference;
        if (r.contains("direction")) ref.direction = channel::parse_direction(r.at("direction").get<std::string>());
        read(r, "paper_level", ref.paper_level);
        read(r, "ink_level", ref.ink_level);
        read(r, "edge_gain", ref.edge_gain);
        read(r, "diagonal_gain", ref.diagonal_gain);
        read(r, "edge_bleed", ref.edge_bleed);
        read(r, "sigma_base", ref.sigma_base);
        read(r, "sigma_transition", ref.sigma_transition);
      }
    }

    if (doc.contains("ddpm")) {
      const auto& d = doc.at("ddpm");
      reject_unknown(d, "ddpm", {"train", "refine", "reverse_variance", "loss_batch", "samples_per_pair"});
      if (d.contains("train")) read_schedule(d.at("train"), "ddpm.train", cfg.ddpm.train);
      if (d.contains("refine")) read_schedule(d.at("refine"), "ddpm.refine", cfg.ddpm.refine);
      if (d.contains("reverse_variance")) {
        const auto v = d.at("reverse_variance").get<std::string>();
        if (v == "posterior") {
          cfg.ddpm.variance = ddpm::ReverseVariance::posterior;
        } else if (v == "beta") {
          cfg.ddpm.variance = ddpm::ReverseVariance::beta;
        } else {
          throw ParameterError("config: ddpm.reverse_variance must be 'posterior' or 'beta'");
        }
      }
      read(d, "loss_batch", cfg.ddpm.loss_batch);
      read(d, "samples_per_pair", cfg.ddpm.samples_per_pair);
    }

    if (doc.contains("denoiser")) {
      const auto& d = doc.at("denoiser");
      reject_unknown(d, "denoiser", {"buckets", "patch_radius"});
      read(d, "buckets", cfg.denoiser.buckets);
      read(d, "patch_radius", cfg.denoiser.patch_radius);
    }

    if (doc.contains("turbo")) {
      const auto& t = doc.at("turbo");
      reject_unknown(t, "turbo", {"lambda_T", "lambda_D", "lambda_R"});
      read(t, "lambda_T", cfg.turbo.lambda_t);
      read(t, "lambda_D", cfg.turbo.lambda_d);
      read(t, "lambda_R", cfg.turbo.lambda_r);
    }

    if (doc.contains("metrics")) {
      const auto& m = doc.at("metrics");
      reject_unknown(m, "metrics", {"ssim", "otsu_bins", "binarization", "fixed_threshold", "feature_patch", "feature_bins"});
      if (m.contains("ssim")) {
        const auto& s = m.at("ssim");
        reject_unknown(s, "metrics.ssim", {"window", "sigma", "k1", "k2", "L"});
        read(s, "window", cfg.metrics.ssim.window);
        read(s, "sigma", cfg.metrics.ssim.sigma);
        read(s, "k1", cfg.metrics.ssim.k1);
        read(s, "k2", cfg.metrics.ssim.k2);
        read(s, "L", cfg.metrics.ssim.dynamic_range);
      }
      read(m, "otsu_bins", cfg.metrics.otsu_bins);
      if (m.contains("binarization")) {
        const auto b = m.at("binarization").get<std::string>();
        if (b == "otsu") {
          cfg.metrics.binarization = metrics::Binarization::otsu;
        } else if (b == "fixed") {
          cfg.metrics.binarization = metrics::Binarization::fixed;
        } else {
          throw ParameterError("config: metrics.binarization must be 'otsu' or 'fixed'");
        }
      }
      read(m, "fixed_threshold", cfg.metrics.fixed_threshold);
      read(m, "feature_patch", cfg.metrics.feature_patch);
      read(m, "feature_bins", cfg.metrics.feature_bins);
    }

    if (doc.contains("aggregation")) {
      const auto& a = doc.at("aggregation");
      reject_unknown(a, "aggregation", {"k", "modes", "ks", "eval_mode"});
      read(a, "k", cfg.aggregation.k);
      read(a, "ks", cfg.aggregation.ks);
      if (a.contains("modes")) {
        cfg.aggregation.modes.clear();
        for (const auto& m : a.at("modes")) cfg.aggregation.modes.push_back(analysis::parse_aggregation_mode(m.get<std::string>()));
      }
      if (a.contains("eval_mode")) cfg.aggregation.eval_mode = analysis::parse_aggregation_mode(a.at("eval_mode").get<std::string>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError(std::string("config field has the wrong type: ") + e.what());
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) { return parse_config(read_file_text(path)); }

std::string to_json(const RunConfig& cfg) {
  const auto& ref = cfg.channel.reference;
  ordered_json modes = ordered_json::array();
  for (auto m : cfg.aggregation.modes) modes.push_back(analysis::to_string(m));
  ordered_json doc{
      {"seed", cfg.seed},
      {"template", {{"width", cfg.templ.width}, {"height", cfg.templ.height}, {"density", cfg.templ.density}, {"scale", cfg.templ.scale}}},
      {"channel",
       {{"model_path", cfg.channel.model_path},
        {"fit_target", channel::to_string(cfg.channel.fit_target)},
        {"reference",
         {{"direction", channel::to_string(ref.direction)},
          {"paper_level", ref.paper_level},
          {"ink_level", ref.ink_level},
          {"edge_gain", ref.edge_gain},
          {"diagonal_gain", ref.diagonal_gain},
          {"edge_bleed", ref.edge_bleed},
          {"sigma_base", ref.sigma_base},
          {"sigma_transition", ref.sigma_transition}}}}},
      {"ddpm",
       {{"train", schedule_json(cfg.ddpm.train)},
        {"refine", schedule_json(cfg.ddpm.refine)},
        {"reverse_variance", cfg.ddpm.variance == ddpm::ReverseVariance::posterior ? "posterior" : "beta"},
        {"loss_batch", cfg.ddpm.loss_batch},
        {"samples_per_pair", cfg.ddpm.samples_per_pair}}},
      {"denoiser", {{"buckets", cfg.denoiser.buckets}, {"patch_radius", cfg.denoiser.patch_radius}}},
      {"turbo", {{"lambda_T", cfg.turbo.lambda_t}, {"lambda_D", cfg.turbo.lambda_d}, {"lambda_R", cfg.turbo.lambda_r}}},
      {"metrics",
       {{"ssim",
         {{"window", cfg.metrics.ssim.window},
          {"sigma", cfg.metrics.ssim.sigma},
          {"k1", cfg.metrics.ssim.k1},
          {"k2", cfg.metrics.ssim.k2},
          {"L", cfg.metrics.ssim.dynamic_range}}},
        {"otsu_bins", cfg.metrics.otsu_bins},
        {"binarization", cfg.metrics.binarization == metrics::Binarization::otsu ? "otsu" : "fixed"},
        {"fixed_threshold", cfg.metrics.fixed_threshold},
        {"feature_patch", cfg.metrics.feature_patch},
        {"feature_bins", cfg.metrics.feature_bins}}},
      {"aggregation",
       {{"k", cfg.aggregation.k},
        {"modes", modes},
        {"ks", cfg.aggregation.ks},
        {"eval_mode", analysis::to_string(cfg.aggregation.eval_mode)}}},
      {"bit_depth", cfg.bit_depth},
  };
  return doc.dump(2) + "\n";
}

void validate(const RunConfig& cfg) {
  auto fail = [](const std::string& field, const std::string& why) {
    throw ParameterError("config: " + field + " " + why);
  };
  if (cfg.templ.width <= 0 || cfg.templ.height <= 0) fail("template.width/height", "must be positive");
  if (!(cfg.templ.density > 0.0 && cfg.templ.density < 1.0)) fail("template.density", "must lie in (0,1)");
  if (cfg.templ.scale < 1) fail("template.scale", "must be >= 1");
  channel::reference_channel(cfg.channel.reference);

  for (const auto* s : {&cfg.ddpm.train, &cfg.ddpm.refine}) {
    if (s->steps < 1 || !(s->beta_start > 0.0 && s->beta_start <= s->beta_end && s->beta_end < 1.0)) {
      fail(s == &cfg.ddpm.train ? "ddpm.train" : "ddpm.refine", "needs 0 < beta_start <= beta_end < 1 and T >= 1");
    }
  }
  if (cfg.ddpm.loss_batch < 1) fail("ddpm.loss_batch", "must be >= 1");
  if (cfg.ddpm.samples_per_pair < 1) fail("ddpm.samples_per_pair", "must be >= 1");
  if (cfg.denoiser.buckets < 1 || cfg.denoiser.buckets > cfg.ddpm.train.steps) fail("denoiser.buckets", "must lie in 1..train.T");
  if (cfg.denoiser.patch_radius < 0) fail("denoiser.patch_radius", "must be >= 0");
  cfg.turbo.validate();

  const auto& m = cfg.metrics;
  if (m.ssim.window < 1 || m.ssim.window % 2 == 0) fail("metrics.ssim.window", "must be odd and positive");
  if (!(m.ssim.sigma > 0.0) || !(m.ssim.k1 > 0.0) || !(m.ssim.k2 > 0.0) || !(m.ssim.dynamic_range > 0.0)) {
    fail("metrics.ssim", "constants must be positive");
  }
  if (m.otsu_bins < 2) fail("metrics.otsu_bins", "must be >= 2");
  if (!(m.fixed_threshold > 0.0 && m.fixed_threshold <= 1.0)) fail("metrics.fixed_threshold", "must lie in (0,1]");
  if (m.feature_patch < 1) fail("metrics.feature_patch", "must be >= 1");
  if (m.feature_bins < 1) fail("metrics.feature_bins", "must be >= 1");

  const auto& a = cfg.aggregation;
  if (a.k < 1) fail("aggregation.k", "must be >= 1");
  if (a.modes.empty()) fail("aggregation.modes", "must not be empty");
  if (a.ks.empty()) fail("aggregation.ks", "must not be empty");
  for (std::size_t i = 0; i < a.ks.size(); ++i) {
    if (a.ks[i] < 1 || (i > 0 && a.ks[i] <= a.ks[i - 1])) fail("aggregation.ks", "must be strictly increasing and >= 1");
  }
  if (a.eval_mode == analysis::AggregationMode::mean_of_scores) fail("aggregation.eval_mode", "must be mean or median");
  if (cfg.bit_depth != 8 && cfg.bit_depth != 16) fail("bit_depth", "must be 8 or 16");
}

}  // namespace cdptwin::cli
