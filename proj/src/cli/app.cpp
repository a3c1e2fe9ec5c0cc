#include "cdptwin/cli/app.hpp"

#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "cdptwin/cli/commands.hpp"
#include "cdptwin/error.hpp"

namespace cdptwin::cli {

namespace {

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> scale;
};

RunConfig effective_config(const Common& common) {
  RunConfig config = common.config_path.empty() ? RunConfig{} : load_config(common.config_path);
  if (common.seed) config.seed = *common.seed;
  if (common.scale) {
    config.templ.scale = *common.scale;
    config.channel.reference.scale = *common.scale;
  }
  return config;
}

std::vector<ModelDir> parse_models(const std::vector<std::string>& specs) {
  std::vector<ModelDir> models;
  for (const auto& spec : specs) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size()) {
      throw UsageError("--model expects NAME=DIR, got '" + spec + "'");
    }
    models.push_back({spec.substr(0, eq), spec.substr(eq + 1)});
  }
  return models;
}

int dispatch(CLI::App& app, int argc, const char* const* argv) {
  Common common;
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--config", common.config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", common.seed, "Overrides the configured seed");
  app.add_option("--scale", common.scale, "Overrides the template-to-image scale factor");

  std::string out;
  std::optional<std::size_t> k;
  std::size_t count = 1;
  std::string templates, images, model_out, conditions, targets, denoiser, ref, report, turbo_report, stacks,
      reference, real, synthetic, direction_text = "print";
  std::vector<std::string> model_specs;
  std::vector<std::string> metric_names{"mse", "ssim"};
  std::function<std::string()> action;

  auto* gen = app.add_subcommand("gen", "Generate random binary templates");
  gen->add_option("--count", count, "Number of templates")->required();
  gen->add_option("--out", out, "Output directory")->required();
  gen->callback([&] { action = [&] { return cmd_gen(effective_config(common), count, out); }; });

  auto* fit = app.add_subcommand("fit", "Fit a pattern-conditioned channel model");
  fit->add_option("--templates", templates)->required();
  fit->add_option("--images", images)->required();
  fit->add_option("--direction", direction_text)->check(CLI::IsMember({"print", "estimate"}));
  fit->add_option("--out", out, "Model JSON path")->required();
  fit->callback([&] {
    action = [&] {
      return cmd_fit(effective_config(common), templates, images, channel::parse_direction(direction_text), out);
    };
  });

  auto* print = app.add_subcommand("print", "Simulate printed-and-scanned realizations");
  print->add_option("--templates", templates)->required();
  print->add_option("--model", model_out, "Channel model JSON (default: reference channel)");
  print->add_option("--k", k, "Realizations per template (default: aggregation.k)");
  print->add_option("--out", out)->required();
  print->callback([&] {
    action = [&] {
      RunConfig config = effective_config(common);
      if (!model_out.empty()) config.channel.model_path = model_out;
      return cmd_print(config, templates, out, k.value_or(config.aggregation.k));
    };
  });

  auto* estimate = app.add_subcommand("estimate", "Estimate templates from acquisitions");
  estimate->add_option("--images", images)->required();
  estimate->add_option("--model", model_out, "Estimate-direction channel model JSON")->required();
  estimate->add_option("--k", k, "Realizations per image (default: aggregation.k)");
  estimate->add_option("--out", out)->required();
  estimate->callback([&] {
    action = [&] {
      RunConfig config = effective_config(common);
      config.channel.model_path = model_out;
      return cmd_estimate(config, images, out, k.value_or(config.aggregation.k));
    };
  });

  auto* ddpm_fit = app.add_subcommand("ddpm-fit", "Fit the conditional denoiser");
  ddpm_fit->add_option("--conditions", conditions)->required();
  ddpm_fit->add_option("--targets", targets)->required();
  ddpm_fit->add_option("--out", out, "Denoiser JSON path")->required();
  ddpm_fit->callback([&] {
    action = [&] { return cmd_ddpm_fit(effective_config(common), conditions, targets, out); };
  });

  auto* ddpm_sample = app.add_subcommand("ddpm-sample", "Sample with a fitted denoiser");
  ddpm_sample->add_option("--denoiser", denoiser)->required()->check(CLI::ExistingFile);
  ddpm_sample->add_option("--conditions", conditions)->required();
  ddpm_sample->add_option("--direction", direction_text)->check(CLI::IsMember({"print", "estimate"}));
  ddpm_sample->add_option("--k", k, "Realizations per condition (default: aggregation.k)");
  ddpm_sample->add_option("--out", out)->required();
  ddpm_sample->callback([&] {
    action = [&] {
      const RunConfig config = effective_config(common);
      return cmd_ddpm_sample(config, denoiser, conditions, out, k.value_or(config.aggregation.k),
                             channel::parse_direction(direction_text));
    };
  });

  auto* eval = app.add_subcommand("eval", "Score models against a reference set");
  eval->add_option("--ref", ref, "Directory with z/ and x/")->required();
  eval->add_option("--model", model_specs, "NAME=DIR, repeatable");
  eval->add_option("--report", report, "CSV report path")->required();
  eval->add_option("--turbo-report", turbo_report, "Loss breakdown CSV path");
  eval->callback([&] {
    action = [&] {
      std::optional<fs::path> turbo;
      if (!turbo_report.empty()) turbo = turbo_report;
      return cmd_eval(effective_config(common), ref, parse_models(model_specs), report, turbo);
    };
  });

  auto* analyze = app.add_subcommand("analyze", "Variability analyses");
  analyze->require_subcommand(1);
  analyze->fallthrough();

  auto* patterns = analyze->add_subcommand("patterns", "Per-pattern statistics of acquisitions");
  patterns->add_option("--templates", templates)->required();
  patterns->add_option("--images", images)->required();
  patterns->add_option("--out", out, "CSV path")->required();
  patterns->callback([&] {
    action = [&] { return cmd_analyze_patterns(effective_config(common), templates, images, out); };
  });

  auto* stdmap = analyze->add_subcommand("stdmap", "Per-pixel standard deviation over realizations");
  stdmap->add_option("--stacks", stacks)->required();
  stdmap->add_option("--out", out)->required();
  stdmap->callback([&] { action = [&] { return cmd_analyze_stdmap(effective_config(common), stacks, out); }; });

  auto* ksweep = analyze->add_subcommand("ksweep", "Score versus number of aggregated realizations");
  ksweep->add_option("--stacks", stacks)->required();
  ksweep->add_option("--reference", reference)->required();
  ksweep->add_option("--metrics", metric_names)->delimiter(',');
  ksweep->add_option("--out", out, "CSV path")->required();
  ksweep->callback([&] {
    action = [&] {
      std::vector<analysis::Metric> list;
      for (const auto& name : metric_names) list.push_back(analysis::parse_metric(name));
      return cmd_analyze_ksweep(effective_config(common), stacks, reference, list, out);
    };
  });

  auto* bitflip = analyze->add_subcommand("bitflip", "Per-pattern bit-flip probability");
  bitflip->add_option("--templates", templates)->required();
  bitflip->add_option("--real", real)->required();
  bitflip->add_option("--synthetic", synthetic);
  bitflip->add_option("--out", out)->required();
  bitflip->callback([&] {
    action = [&] {
      std::optional<fs::path> synth;
      if (!synthetic.empty()) synth = synthetic;
      return cmd_analyze_bitflip(effective_config(common), templates, real, synth, out);
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    std::cout << action() << '\n';
    return 0;
  } catch (const ParameterError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Digital twin of the print-and-scan channel for copy-detection patterns", "cdp_twin"};
  return dispatch(app, argc, argv);
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"cdp_twin"};
  for (const auto& a : args) argv.push_back(a.c_str());
  CLI::App app{"Digital twin of the print-and-scan channel for copy-detection patterns", "cdp_twin"};
  return dispatch(app, static_cast<int>(argv.size()), argv.data());
}

}  // namespace cdptwin::cli
