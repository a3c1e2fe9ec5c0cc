#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "cdptwin/channel.hpp"
#include "cdptwin/cli/app.hpp"
#include "cdptwin/cli/commands.hpp"
#include "cdptwin/cli/config.hpp"
#include "cdptwin/cli/dataset.hpp"
#include "cdptwin/error.hpp"
#include "cdptwin/fileio.hpp"
#include "cdptwin/pgm.hpp"

using namespace cdptwin;
using namespace cdptwin::cli;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("cdptwin_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    write_file_atomic(path("cfg.json"), R"({"seed": 5, "template": {"width": 24, "height": 24},
      "ddpm": {"train": {"T": 60}, "refine": {"T": 40}, "samples_per_pair": 4},
      "aggregation": {"k": 3, "ks": [1, 3]}})");
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  int cli(std::vector<std::string> args) {
    args.insert(args.begin(), {"--config", path("cfg.json")});
    return run(args);
  }

  static std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir))
      if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = read_file_text(e.path());
    return out;
  }

  fs::path dir_;
};

}  // namespace

TEST(Config, DefaultsEncodeTrainingAndRefinementSchedules) {
  const RunConfig c;
  EXPECT_EQ(c.ddpm.train.beta_start, 1e-6);
  EXPECT_EQ(c.ddpm.train.beta_end, 0.01);
  EXPECT_EQ(c.ddpm.train.steps, 2000);
  EXPECT_EQ(c.ddpm.refine.beta_start, 1e-4);
  EXPECT_EQ(c.ddpm.refine.beta_end, 0.09);
  EXPECT_EQ(c.ddpm.refine.steps, 1000);
  EXPECT_EQ(c.aggregation.k, 21u);
  EXPECT_EQ(c.ddpm.loss_batch, 36u);
  EXPECT_NO_THROW(validate(c));
}

TEST(Config, JsonRoundTrip) {
  RunConfig c = parse_config(R"({"seed": 9, "turbo": {"lambda_T": 2.0}, "metrics": {"binarization": "fixed"}})");
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.turbo.lambda_t, 2.0);
  EXPECT_EQ(c.metrics.binarization, metrics::Binarization::fixed);
  EXPECT_EQ(to_json(parse_config(to_json(c))), to_json(c));
}

TEST(Config, RejectsUnknownKeysAndInvalidValues) {
  EXPECT_THROW(parse_config(R"({"sed": 1})"), ParameterError);
  EXPECT_THROW(validate(parse_config(R"({"template": {"density": 1.5}})")), ParameterError);
  EXPECT_THROW(validate(parse_config(R"({"aggregation": {"ks": [3, 1]}})")), ParameterError);
  EXPECT_THROW(validate(parse_config(R"({"ddpm": {"refine": {"beta_end": 1.0}}})")), ParameterError);
  EXPECT_THROW(parse_config("{"), ParameterError);
}

TEST_F(CliTest, GenWritesTemplatesAndManifest) {
  ASSERT_EQ(cli({"gen", "--count", "3", "--out", path("z")}), 0);
  EXPECT_TRUE(fs::exists(path("z/t0000.pgm")));
  EXPECT_TRUE(fs::exists(path("z/t0002.pgm")));
  EXPECT_TRUE(fs::exists(path("z/manifest.json")));
  EXPECT_TRUE(fs::exists(path("z/config.json")));
  EXPECT_EQ(read_pgm(path("z/t0001.pgm")).image.width(), 24);
  ASSERT_EQ(cli({"gen", "--count", "0", "--out", path("empty")}), 0);
  EXPECT_NE(read_file_text(path("empty/manifest.json")).find("\"files\": []"), std::string::npos);
}

TEST_F(CliTest, PrintHonorsConfiguredKAndNaming) {
  ASSERT_EQ(cli({"gen", "--count", "2", "--out", path("z")}), 0);
  ASSERT_EQ(cli({"print", "--templates", path("z"), "--out", path("x")}), 0);
  for (int r = 1; r <= 3; ++r) EXPECT_TRUE(fs::exists(path("x/t0000_r" + std::to_string(r) + ".pgm")));
  EXPECT_FALSE(fs::exists(path("x/t0000_r4.pgm")));
  ASSERT_EQ(cli({"print", "--templates", path("z"), "--k", "5", "--out", path("x5")}), 0);
  EXPECT_EQ(scan_dataset(path("x5")).at("t0001").files.size(), 5u);
}

TEST_F(CliTest, FitPrintFitIsAFixedPoint) {
  write_file_atomic(path("cfg.json"), R"({"seed": 5, "template": {"width": 100, "height": 100}})");
  ASSERT_EQ(cli({"gen", "--count", "8", "--out", path("z")}), 0);
  ASSERT_EQ(cli({"print", "--templates", path("z"), "--k", "4", "--out", path("x")}), 0);
  ASSERT_EQ(cli({"fit", "--templates", path("z"), "--images", path("x"), "--out", path("m1.json")}), 0);
  ASSERT_EQ(cli({"print", "--templates", path("z"), "--model", path("m1.json"), "--k", "4", "--out", path("x2")}), 0);
  ASSERT_EQ(cli({"fit", "--templates", path("z"), "--images", path("x2"), "--out", path("m2.json")}), 0);
  const auto m1 = channel::load_model(path("m1.json"));
  const auto m2 = channel::load_model(path("m2.json"));
  int close = 0, total = 0;
  for (int p = 0; p < channel::kPatternCount; ++p) {
    const auto& a = m1.table()[channel::PatternId(p)];
    const auto& b = m2.table()[channel::PatternId(p)];
    if (a.count < 100) continue;
    ++total;
    if (std::abs(a.mean - b.mean) <= 5 * a.std * std::sqrt(2.0 / static_cast<double>(a.count)) + 1e-12) ++close;
  }
  ASSERT_GT(total, 400);
  EXPECT_GE(close, static_cast<int>(0.99 * total));
}

TEST_F(CliTest, EstimateWithPrintModelIsUsageError) {
  ASSERT_EQ(cli({"gen", "--count", "1", "--out", path("z")}), 0);
  ASSERT_EQ(cli({"print", "--templates", path("z"), "--k", "1", "--out", path("x")}), 0);
  ASSERT_EQ(cli({"fit", "--templates", path("z"), "--images", path("x"), "--out", path("m.json")}), 0);
  EXPECT_EQ(cli({"estimate", "--images", path("x"), "--model", path("m.json"), "--out", path("zt")}), 2);
  EXPECT_FALSE(fs::exists(path("zt")));
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(cli({"gen", "--out", path("q")}), 2);
  EXPECT_EQ(cli({"frobnicate"}), 2);
  EXPECT_EQ(cli({"print", "--templates", path("missing"), "--out", path("x")}), 3);
  write_file_atomic(path("bad.json"), R"({"template": {"width": 0}})");
  EXPECT_EQ(run({"--config", path("bad.json"), "gen", "--count", "1", "--out", path("z")}), 2);
  EXPECT_FALSE(fs::exists(path("z")));
  EXPECT_EQ(run({"--help"}), 0);
}

TEST_F(CliTest, DdpmFitReportsLossesAndSamplesDeterministically) {
  ASSERT_EQ(cli({"gen", "--count", "2", "--out", path("z")}), 0);
  ASSERT_EQ(cli({"print", "--templates", path("z"), "--k", "1", "--out", path("x")}), 0);
  testing::internal::CaptureStdout();
  ASSERT_EQ(cli({"ddpm-fit", "--conditions", path("z"), "--targets", path("x"), "--out", path("d.json")}), 0);
  const auto summary = testing::internal::GetCapturedStdout();
  EXPECT_NE(summary.find("zero-denoiser"), std::string::npos);
  ASSERT_EQ(cli({"ddpm-sample", "--denoiser", path("d.json"), "--conditions", path("z"), "--k", "2", "--out", path("s1")}), 0);
  ASSERT_EQ(cli({"ddpm-sample", "--denoiser", path("d.json"), "--conditions", path("z"), "--k", "2", "--out", path("s2")}), 0);
  EXPECT_EQ(snapshot(path("s1")), snapshot(path("s2")));
}

TEST_F(CliTest, EvalSelfEvaluationAndMissingFiles) {
  ASSERT_EQ(cli({"gen", "--count", "2", "--out", path("ref/z")}), 0);
  ASSERT_EQ(cli({"print", "--templates", path("ref/z"), "--k", "1", "--out", path("ref/x")}), 0);
  fs::copy(path("ref"), path("self"), fs::copy_options::recursive);
  ASSERT_EQ(cli({"eval", "--ref", path("ref"), "--model", "self=" + path("self"), "--report", path("r.csv")}), 0);
  const auto report = read_file_text(path("r.csv"));
  EXPECT_EQ(report.rfind("model,pfid_x2z,hamming,pfid_z2x,mse,ssim\nW/O processing,", 0), 0u);
  EXPECT_NE(report.find("\nself,0,0,0,0,1\n"), std::string::npos) << report;
  ASSERT_EQ(cli({"eval", "--ref", path("ref"), "--model", "self=" + path("self"), "--report", path("r2.csv")}), 0);
  EXPECT_EQ(read_file_text(path("r2.csv")), report);

  fs::remove(path("self/x/t0000_r1.pgm"));
  fs::remove(path("self/z/t0001.pgm"));
  testing::internal::CaptureStderr();
  EXPECT_EQ(cli({"eval", "--ref", path("ref"), "--model", "self=" + path("self"), "--report", path("r3.csv")}), 3);
  const auto err = testing::internal::GetCapturedStderr();
  EXPECT_NE(err.find("2 missing"), std::string::npos) << err;
  EXPECT_FALSE(fs::exists(path("r3.csv")));
}

TEST_F(CliTest, AnalyzeCommands) {
  ASSERT_EQ(cli({"gen", "--count", "2", "--out", path("z")}), 0);
  ASSERT_EQ(cli({"print", "--templates", path("z"), "--out", path("x")}), 0);
  ASSERT_EQ(cli({"analyze", "patterns", "--templates", path("z"), "--images", path("z"), "--out", path("p.csv")}), 0);
  const auto csv = read_file_text(path("p.csv"));
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);
  while (std::getline(lines, line)) {
    const auto fields = line.substr(line.find(',', line.find(',', line.find(',') + 1) + 1) + 1);
    EXPECT_EQ(fields.substr(0, fields.find(',')), "0") << line;
  }
  ASSERT_EQ(cli({"analyze", "stdmap", "--stacks", path("x"), "--out", path("sm")}), 0);
  EXPECT_EQ(read_pgm(path("sm/t0000_std.pgm")).bit_depth, 16);
  EXPECT_TRUE(fs::exists(path("sm/t0000_std.json")));
  ASSERT_EQ(cli({"analyze", "ksweep", "--stacks", path("x"), "--reference", path("z"), "--out", path("ks.csv")}), 0);
  // 2 ks x 3 modes x 2 metrics plus the header.
  const auto ks = read_file_text(path("ks.csv"));
  EXPECT_EQ(std::count(ks.begin(), ks.end(), '\n'), 13);
  testing::internal::CaptureStdout();
  ASSERT_EQ(cli({"analyze", "bitflip", "--templates", path("z"), "--real", path("x"), "--synthetic", path("x"), "--out",
                 path("bf")}),
            0);
  EXPECT_NE(testing::internal::GetCapturedStdout().find("pearson"), std::string::npos);
  EXPECT_TRUE(fs::exists(path("bf/real.csv")));
  EXPECT_TRUE(fs::exists(path("bf/synthetic.csv")));
}

TEST_F(CliTest, RerunsAreByteIdentical) {
  const std::string d = path("run");
  std::vector<std::map<std::string, std::string>> snapshots;
  for (int attempt = 0; attempt < 2; ++attempt) {
    fs::remove_all(d);
    ASSERT_EQ(cli({"gen", "--count", "2", "--out", d + "/z"}), 0);
    ASSERT_EQ(cli({"print", "--templates", d + "/z", "--out", d + "/x"}), 0);
    ASSERT_EQ(cli({"fit", "--templates", d + "/z", "--images", d + "/x", "--direction", "estimate", "--out",
                   d + "/m/est.json"}),
              0);
    ASSERT_EQ(cli({"estimate", "--images", d + "/x", "--model", d + "/m/est.json", "--out", d + "/zt"}), 0);
    ASSERT_EQ(cli({"analyze", "stdmap", "--stacks", d + "/x", "--out", d + "/sm"}), 0);
    snapshots.push_back(snapshot(d));
  }
  EXPECT_EQ(snapshots[0].size(), snapshots[1].size());
  EXPECT_TRUE(snapshots[0] == snapshots[1]);
}
