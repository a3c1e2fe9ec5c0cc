#include <gtest/gtest.h>

#include <cmath>

#include "cdptwin/error.hpp"
#include "cdptwin/metrics.hpp"
#include "oracles.hpp"

using namespace cdptwin;
using namespace cdptwin::metrics;

namespace {

GaussianStats stats_1d(double mu, double var) {
  GaussianStats s;
  s.mean = Eigen::VectorXd::Constant(1, mu);
  s.cov = Eigen::MatrixXd::Constant(1, 1, var);
  s.n = 2;
  return s;
}

GrayImage checkerboard(int n) {
  Field f(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) f.at(r, c) = (r + c) % 2;
  return GrayImage(f);
}

}  // namespace

TEST(Mse, NamedCases) {
  const auto img = oracle::random_image(8, 8, 1);
  EXPECT_EQ(mse(img, img), 0.0);
  EXPECT_EQ(mse(GrayImage(4, 4, 0.0), GrayImage(4, 4, 1.0)), 1.0);
  EXPECT_THROW(mse(GrayImage(4, 4, 0.0), GrayImage(4, 5, 0.0)), ParameterError);
}

TEST(Mse, IndependentFairBitsNearHalf) {
  const auto a = generate_template(228, 228, 0.5, 1).to_gray();
  const auto b = generate_template(228, 228, 0.5, 2).to_gray();
  EXPECT_NEAR(mse(a, b), 0.5, 0.02);
  EXPECT_DOUBLE_EQ(mse(a, b), mse(b, a));
}

TEST(Otsu, SymmetricBimodalSplitsExactly) {
  Field f(10, 10);
  for (std::size_t i = 0; i < f.size(); ++i) f.values()[i] = i % 2 ? 0.9 : 0.1;
  const GrayImage img(f);
  const auto t = otsu_threshold(img);
  EXPECT_FALSE(t.degenerate);
  EXPECT_GT(t.threshold, 0.1);
  EXPECT_LT(t.threshold, 0.9);
  const auto bits = otsu_binarize(img);
  for (std::size_t i = 0; i < f.size(); ++i) EXPECT_EQ(bits.bits()[i], i % 2);
}

TEST(Otsu, TiesGoToTheLowerThreshold) {
  // Two occupied bins far apart: every edge between them separates the same
  // classes, so the first one must win.
  Field f(2, 1);
  f.values()[0] = 0.0;
  f.values()[1] = 1.0;
  EXPECT_EQ(otsu_threshold(GrayImage(f)).bin, 1);
}

TEST(Otsu, MatchesExhaustiveSearch) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto img = oracle::random_image(16, 16, seed);
    EXPECT_EQ(otsu_threshold(img).bin, oracle::exhaustive_otsu_bin(img, 256)) << "seed " << seed;
  }
}

TEST(Otsu, SixteenValueArray) {
  const std::vector<double> values{0.02, 0.05, 0.11, 0.13, 0.17, 0.31, 0.33, 0.41,
                                   0.58, 0.61, 0.66, 0.72, 0.79, 0.85, 0.91, 0.97};
  const GrayImage img(Field(4, 4, values));
  EXPECT_EQ(otsu_threshold(img).bin, oracle::exhaustive_otsu_bin(img, 256));
}

TEST(Otsu, ConstantImageIsDegenerate) {
  const auto t = otsu_threshold(GrayImage(5, 5, 0.4));
  EXPECT_TRUE(t.degenerate);
  const auto bits = otsu_binarize(GrayImage(5, 5, 0.4));
  for (auto b : bits.bits()) EXPECT_EQ(b, 0);
}

TEST(Hamming, NamedCases) {
  const auto z = generate_template(228, 228, 0.5, 3);
  EXPECT_EQ(hamming(z, z), 0.0);
  EXPECT_EQ(hamming(z, z.complement()), 1.0);
  const auto other = generate_template(228, 228, 0.5, 4);
  EXPECT_NEAR(hamming(z, other), 0.5, 0.02);
  EXPECT_THROW(hamming(GrayImage(2, 2, 0.5), GrayImage(2, 2, 0.0)), ParameterError);
}

TEST(Ssim, SelfSimilarityAndSymmetry) {
  const auto a = oracle::random_image(20, 16, 1);
  const auto b = oracle::random_image(20, 16, 2);
  EXPECT_EQ(ssim(a, a), 1.0);
  EXPECT_NEAR(ssim(a, b), ssim(b, a), 1e-12);
  EXPECT_THROW(ssim(GrayImage(10, 10, 0.0), GrayImage(10, 10, 0.0)), ParameterError);
}

TEST(Ssim, MatchesDirectFormula) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto a = oracle::random_image(16, 16, 10 + seed);
    const auto b = oracle::random_image(16, 16, 20 + seed);
    EXPECT_NEAR(ssim(a, b), oracle::naive_ssim(a, b), 1e-9);
  }
}

TEST(Ssim, GaussianWindowIsNormalized) {
  const auto w = gaussian_window(11, 1.5);
  double s = 0;
  for (double x : w) s += x;
  EXPECT_NEAR(s, 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(w[0], w[10]);
}

TEST(Pearson, NamedCases) {
  const std::vector<double> u{0.3, 1.2, -0.7, 2.5, 0.0, 4.1, -1.9, 0.8, 1.1, 3.3};
  std::vector<double> affine, neg;
  for (double x : u) {
    affine.push_back(2 * x + 3);
    neg.push_back(-x);
  }
  EXPECT_NEAR(pearson(u, affine), 1.0, 1e-12);
  EXPECT_NEAR(pearson(u, neg), -1.0, 1e-12);
  const std::vector<double> v{1.0, 0.2, 0.4, 2.0, -0.5, 3.0, 0.1, 0.0, 1.5, 2.2};
  EXPECT_NEAR(pearson(u, v), oracle::sample_pearson(u, v), 1e-12);
  EXPECT_THROW(pearson(u, std::vector<double>(10, 1.0)), NumericalError);
  EXPECT_THROW(pearson(std::vector<double>{1.0}, std::vector<double>{1.0}), ParameterError);
}

TEST(GaussianStats, HandComputedSquare) {
  const auto s = gaussian_stats({{0, 0}, {2, 0}, {0, 2}, {2, 2}});
  EXPECT_DOUBLE_EQ(s.mean(0), 1.0);
  EXPECT_DOUBLE_EQ(s.mean(1), 1.0);
  EXPECT_NEAR(s.cov(0, 0), 4.0 / 3.0, 1e-15);
  EXPECT_NEAR(s.cov(1, 1), 4.0 / 3.0, 1e-15);
  EXPECT_NEAR(s.cov(0, 1), 0.0, 1e-15);
  const auto same = gaussian_stats({{1, 2}, {1, 2}, {1, 2}});
  EXPECT_EQ(same.cov.norm(), 0.0);
  EXPECT_THROW(gaussian_stats({{1, 2}}), ParameterError);
}

TEST(Frechet, ClosedFormCases) {
  EXPECT_NEAR(frechet_distance(stats_1d(0, 1), stats_1d(1, 1)), 1.0, 1e-12);
  EXPECT_NEAR(frechet_distance(stats_1d(0, 4), stats_1d(0, 1)), 1.0, 1e-12);
  EXPECT_EQ(frechet_distance(stats_1d(0.3, 2), stats_1d(0.3, 2)), 0.0);
}

TEST(Frechet, OneDimensionalFormula) {
  Rng rng(5, "frechet", 0);
  for (int i = 0; i < 200; ++i) {
    const double m1 = rng.normal(), m2 = rng.normal();
    const double s1 = 0.1 + 3 * rng.uniform(), s2 = 0.1 + 3 * rng.uniform();
    const double expect = (m1 - m2) * (m1 - m2) + (s1 - s2) * (s1 - s2);
    EXPECT_NEAR(frechet_distance(stats_1d(m1, s1 * s1), stats_1d(m2, s2 * s2)), expect, 1e-9);
  }
}

TEST(Frechet, SymmetricAndNonNegativeInHigherDimensions) {
  std::vector<std::vector<double>> a, b;
  Rng rng(6, "frechet", 0);
  for (int i = 0; i < 50; ++i) {
    a.push_back({rng.normal(), rng.normal(), rng.normal()});
    b.push_back({rng.normal() + 0.5, 2 * rng.normal(), rng.normal()});
  }
  const auto p = gaussian_stats(a), q = gaussian_stats(b);
  const double d = frechet_distance(p, q);
  EXPECT_GT(d, 0.0);
  EXPECT_NEAR(d, frechet_distance(q, p), 1e-9);
  EXPECT_THROW(frechet_distance(p, stats_1d(0, 1)), ParameterError);
  GaussianStats bad = q;
  bad.cov(0, 0) = -1.0;
  EXPECT_THROW(frechet_distance(p, bad), NumericalError);
}

TEST(PatchFeatures, NamedCases) {
  const auto flat = patch_histogram_features(GrayImage(8, 8, 0.3), 4, 4);
  ASSERT_EQ(flat.size(), 4u);
  for (const auto& v : flat) {
    EXPECT_EQ(std::count(v.begin(), v.end(), 1.0), 1);
    EXPECT_EQ(std::count(v.begin(), v.end(), 0.0), 3);
  }
  const auto board = patch_histogram_features(checkerboard(8), 8, 2);
  ASSERT_EQ(board.size(), 1u);
  EXPECT_DOUBLE_EQ(board[0][0], 0.5);
  EXPECT_DOUBLE_EQ(board[0][1], 0.5);
  for (const auto& v : patch_histogram_features(oracle::random_image(32, 32, 1), 16, 16)) {
    double s = 0;
    for (double x : v) s += x;
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
  EXPECT_THROW(patch_histogram_features(GrayImage(8, 8, 0.0), 16, 4), ParameterError);
}

TEST(Evaluate, WithoutProcessingIdentityWiring) {
  EvaluationSet set;
  for (std::uint64_t i = 0; i < 3; ++i) {
    const auto z = generate_template(32, 32, 0.5, i);
    set.z.push_back(z);
    set.x.push_back(z.to_gray());
    set.z_tilde.push_back(z.to_gray());
    set.x_tilde.push_back(z.to_gray());
  }
  const auto r = evaluate("perfect", set, {});
  EXPECT_EQ(r.model, "perfect");
  EXPECT_EQ(r.hamming, 0.0);
  EXPECT_EQ(r.mse, 0.0);
  EXPECT_EQ(r.ssim, 1.0);
  EXPECT_NEAR(r.pfid_x2z, 0.0, 1e-12);
  EXPECT_NEAR(r.pfid_z2x, 0.0, 1e-12);
}

TEST(Binarization, FixedThresholdSwitch) {
  Field f(3, 1);
  f.values()[0] = 0.2;
  f.values()[1] = 0.5;
  f.values()[2] = 0.7;
  MetricSettings s;
  s.binarization = Binarization::fixed;
  s.fixed_threshold = 0.5;
  const auto bits = binarize(GrayImage(f), s);
  EXPECT_EQ(bits.bits()[0], 0);
  EXPECT_EQ(bits.bits()[1], 1);
  EXPECT_EQ(bits.bits()[2], 1);
}
