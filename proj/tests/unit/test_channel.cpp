#include <gtest/gtest.h>

#include <set>

#include "cdptwin/analysis.hpp"
#include "cdptwin/channel.hpp"
#include "cdptwin/error.hpp"
#include "oracles.hpp"

using namespace cdptwin;
using namespace cdptwin::channel;

namespace {

BinaryTemplate neighborhood(const std::array<std::uint8_t, 9>& bits) {
  Grid<std::uint8_t> g(3, 3);
  for (int i = 0; i < 9; ++i) g.values()[static_cast<std::size_t>(i)] = bits[static_cast<std::size_t>(i)];
  return BinaryTemplate(g);
}

ChannelModel constant_model(double mean, double std, Direction direction = Direction::print, int scale = 1) {
  PatternTable table;
  for (auto& e : table.entries()) {
    e.count = 1;
    e.mean = mean;
    e.std = std;
  }
  return ChannelModel(direction, scale, table, GlobalStats{mean, std});
}

ReferenceChannelParams noiseless() {
  ReferenceChannelParams p;
  p.sigma_base = 0;
  p.sigma_transition = 0;
  return p;
}

}  // namespace

TEST(Pattern, NamedIds) {
  EXPECT_EQ(extract_pattern(neighborhood({0, 0, 0, 0, 0, 0, 0, 0, 0}), 1, 1).value(), 0);
  EXPECT_EQ(extract_pattern(neighborhood({1, 1, 1, 1, 1, 1, 1, 1, 1}), 1, 1).value(), 511);
  EXPECT_EQ(extract_pattern(neighborhood({0, 0, 0, 0, 1, 0, 0, 0, 0}), 1, 1).value(), 16);
  EXPECT_EQ(extract_pattern(neighborhood({1, 0, 0, 0, 0, 0, 0, 0, 0}), 1, 1).value(), 256);
  EXPECT_EQ(PatternId(16).center_bit(), 1);
}

TEST(Pattern, BorderIsOutOfDomain) {
  const auto z = generate_template(5, 5, 0.5, 1);
  EXPECT_THROW(extract_pattern(z, 0, 2), DomainError);
  EXPECT_THROW(extract_pattern(z, 2, 4), DomainError);
  EXPECT_FALSE(is_interior(z, 4, 4));
  EXPECT_TRUE(is_interior(z, 1, 3));
  EXPECT_THROW(PatternId(512), DomainError);
}

TEST(Pattern, ExtractionIsABijection) {
  std::set<int> seen;
  for (int p = 0; p < kPatternCount; ++p) {
    const auto bits = pattern_bits(PatternId(p));
    const int back = extract_pattern(neighborhood(bits), 1, 1).value();
    EXPECT_EQ(back, p);
    seen.insert(back);
  }
  EXPECT_EQ(seen.size(), 512u);
}

TEST(FitChannel, RejectsEmptyInput) {
  EXPECT_THROW(fit_channel({}, Direction::print, 1), ParameterError);
}

TEST(FitChannel, DeterministicChannelHasZeroStd) {
  const auto z = generate_template(40, 40, 0.5, 1);
  for (int s : {1, 3}) {
    const std::vector<TemplateImagePair> pairs{{z, upscale(z, s).to_gray()}};
    const auto m = fit_channel(pairs, Direction::print, s);
    for (const auto& e : m.table().entries()) {
      if (e.observed()) {
        EXPECT_EQ(e.std, 0.0);
      }
    }
  }
}

TEST(FitChannel, UnobservedPatternsTakeGlobalFallback) {
  const auto z = generate_template(6, 6, 0.5, 2);
  const std::vector<TemplateImagePair> pairs{{z, z.to_gray()}};
  const auto m = fit_channel(pairs, Direction::print, 1);
  EXPECT_LT(m.table().observed_count(), 512u);
  for (const auto& e : m.table().entries()) {
    if (!e.observed()) {
      EXPECT_EQ(e.count, 0u);
      EXPECT_EQ(e.mean, m.global().mean);
      EXPECT_EQ(e.std, m.global().std);
    }
  }
}

TEST(FitChannel, RecoversKnownChannel) {
  const auto truth = reference_channel({});
  std::vector<TemplateImagePair> pairs;
  for (std::uint64_t i = 0; i < 48; ++i) {
    const auto z = generate_template(100, 100, 0.5, 100 + i);
    pairs.push_back({z, simulate_print(truth, z, 1, 200 + i)[0]});
  }
  const auto fitted = fit_channel(pairs, Direction::print, 1);
  int checked = 0, within = 0;
  for (int p = 0; p < kPatternCount; ++p) {
    const auto& t = truth.table()[PatternId(p)];
    const auto& f = fitted.table()[PatternId(p)];
    ASSERT_GE(f.count, 200u) << "pattern " << p;
    ++checked;
    const double expected = oracle::clipped_normal_mean(t.mean, t.std);
    if (std::abs(f.mean - expected) <= 4 * t.std / std::sqrt(static_cast<double>(f.count))) ++within;
  }
  EXPECT_GE(within, static_cast<int>(0.99 * checked));
}

TEST(ReferenceChannel, MatchesClosedForm) {
  const auto m = reference_channel({});
  const oracle::DotGain dg;
  for (int p = 0; p < kPatternCount; ++p) {
    const auto b = pattern_bits(PatternId(p));
    int bits[9];
    for (int i = 0; i < 9; ++i) bits[i] = b[static_cast<std::size_t>(i)];
    const auto [mu, sigma] = dg.law(bits);
    const auto& e = m.table()[PatternId(p)];
    EXPECT_NEAR(e.mean, mu, 1e-15);
    EXPECT_NEAR(e.std, sigma, 1e-15);
    EXPECT_NEAR(e.flip_prob, oracle::flip_probability(mu, sigma, 0.5, bits[4]), 1e-12);
  }
}

TEST(SimulatePrint, ZeroNoiseRealizationsAreIdentical) {
  const auto z = generate_template(20, 20, 0.5, 3);
  const auto stack = simulate_print(constant_model(0.4, 0.0), z, 5, 9);
  for (std::size_t r = 1; r < stack.k(); ++r) EXPECT_EQ(stack[r], stack[0]);
}

TEST(SimulatePrint, GeometryDeterminismAndRange) {
  const auto z = generate_template(228, 228, 0.5, 4);
  ReferenceChannelParams p;
  p.scale = 3;
  const auto model = reference_channel(p);
  const auto a = simulate_print(model, z, 2, 1);
  EXPECT_EQ(a.width(), 684);
  EXPECT_EQ(a.height(), 684);
  EXPECT_EQ(a, simulate_print(model, z, 2, 1));
  EXPECT_NE(a[0], a[1]);
  const auto b = simulate_print(reference_channel({}), z, 21, 2);
  EXPECT_EQ(b.k(), 21u);
  for (const auto& img : b.images())
    for (double v : img.pixels()) ASSERT_TRUE(v >= 0.0 && v <= 1.0);
}

TEST(SimulatePrint, StdMapConvergesToPatternStd) {
  const auto z = generate_template(12, 12, 0.5, 5);
  const auto stack = simulate_print(constant_model(0.5, 0.05), z, 1000, 6);
  const auto map = analysis::std_map(stack);
  for (double s : map.values()) EXPECT_NEAR(s, 0.05, 0.005);
}

TEST(SimulatePrint, DirectionMismatchIsUsageError) {
  const auto z = generate_template(8, 8, 0.5, 1);
  EXPECT_THROW(simulate_print(constant_model(0.5, 0.1, Direction::estimate), z, 1, 1), UsageError);
  EXPECT_THROW(estimate_template(constant_model(0.5, 0.1), z.to_gray(), 1, 1), UsageError);
  EXPECT_THROW(simulate_print(constant_model(0.5, 0.1), z, 0, 1), ParameterError);
}

TEST(EstimateTemplate, ClosedLoopOnNoiselessChannel) {
  const auto print_model = reference_channel(noiseless());
  std::vector<TemplateImagePair> pairs;
  for (std::uint64_t i = 0; i < 8; ++i) {
    const auto z = generate_template(64, 64, 0.5, 50 + i);
    pairs.push_back({z, simulate_print(print_model, z, 1, i)[0]});
  }
  const auto est = fit_channel(pairs, Direction::estimate, 1);
  for (const auto& pair : pairs) {
    const auto z_tilde = metrics::otsu_binarize(estimate_template(est, pair.x, 1, 7)[0]);
    for (int r = 1; r + 1 < pair.z.height(); ++r)
      for (int c = 1; c + 1 < pair.z.width(); ++c) ASSERT_EQ(z_tilde.at(r, c), pair.z.at(r, c));
  }
}

TEST(EstimateTemplate, ScaleThreeDownscalesFirst) {
  ReferenceChannelParams p = noiseless();
  p.scale = 3;
  const auto print_model = reference_channel(p);
  const auto z = generate_template(30, 30, 0.5, 8);
  const std::vector<TemplateImagePair> pairs{{z, simulate_print(print_model, z, 1, 1)[0]}};
  const auto est = fit_channel(pairs, Direction::estimate, 3);
  const auto out = estimate_template(est, pairs[0].x, 2, 3);
  EXPECT_EQ(out.width(), 30);
  EXPECT_EQ(out.height(), 30);
}

TEST(EstimateTemplate, RealizationsDiffer) {
  const auto x = oracle::random_image(16, 16, 1);
  const auto stack = estimate_template(constant_model(0.5, 0.2, Direction::estimate), x, 3, 4);
  EXPECT_NE(stack[0], stack[1]);
}

TEST(FitTarget, BlockUsesEveryPixelOfTheBlock) {
  const auto z = generate_template(20, 20, 0.5, 9);
  const auto x = simulate_print(constant_model(0.5, 0.1, Direction::print, 3), z, 1, 1)[0];
  const std::vector<TemplateImagePair> pairs{{z, x}};
  const auto center = tabulate(pairs, Direction::print, 3, FitTarget::center);
  const auto block = tabulate(pairs, Direction::print, 3, FitTarget::block);
  EXPECT_EQ(block.observations, 9 * center.observations);
}

TEST(ModelJson, RoundTripsExactly) {
  const auto m = reference_channel({});
  EXPECT_EQ(channel_from_json(to_json(m)), m);
  const auto z = generate_template(30, 30, 0.5, 1);
  const std::vector<TemplateImagePair> pairs{{z, simulate_print(m, z, 1, 1)[0]}};
  const auto fitted = fit_channel(pairs, Direction::estimate, 1, FitTarget::block);
  EXPECT_EQ(channel_from_json(to_json(fitted)), fitted);
  const auto text = to_json(m);
  EXPECT_LT(text.find("\"direction\""), text.find("\"scale\""));
  EXPECT_LT(text.find("\"scale\""), text.find("\"sampling_law\""));
  EXPECT_LT(text.find("\"sampling_law\""), text.find("\"table\""));
}

TEST(ModelJson, RejectsMalformedDocuments) {
  EXPECT_THROW(channel_from_json("{"), FormatError);
  EXPECT_THROW(channel_from_json("{\"direction\": \"print\"}"), FormatError);
}
