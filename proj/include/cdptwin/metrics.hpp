#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cdptwin/imaging.hpp"

namespace cdptwin::metrics {

/// Mean squared pixel difference.
double mse(const GrayImage& a, const GrayImage& b);

/// Histogram bin of a [0,1] value: floor(v * bins), with 1.0 in the last bin.
int histogram_bin(double value, int bins);

struct OtsuResult {
  /// Threshold on the [0,1] scale, always a bin edge: bin / bins.
  double threshold = 0.0;
  /// Pixels whose histogram bin is >= `bin` binarize to 1.
  int bin = 0;
  /// Only one histogram bin was occupied. Then `bin` is one past the occupied
  /// bin and binarization yields all zeros.
  bool degenerate = false;
};

/// Otsu's method over a `bins`-bin histogram of [0,1]. Candidate thresholds
/// are the interior bin edges; the class statistics use the exact pixel values
/// in each bin. Ties go to the lower threshold.
OtsuResult otsu_threshold(const GrayImage& image, int bins = 256);

BinaryTemplate binarize(const GrayImage& image, const OtsuResult& threshold, int bins = 256);
BinaryTemplate otsu_binarize(const GrayImage& image, int bins = 256);
/// value >= threshold -> 1.
BinaryTemplate fixed_binarize(const GrayImage& image, double threshold);

/// Normalized Hamming distance: fraction of differing positions.
double hamming(const BinaryTemplate& a, const BinaryTemplate& b);
/// Same, for gray images that must already be exactly binary.
double hamming(const GrayImage& a, const GrayImage& b);

struct SsimParams {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
};

/// Mean SSIM over all full windows (no padding) of a normalized Gaussian window.
double ssim(const GrayImage& a, const GrayImage& b, const SsimParams& params = {});

/// Normalized 1-D Gaussian taps used by ssim().
std::vector<double> gaussian_window(int size, double sigma);

/// Sample Pearson correlation. Throws ParameterError for mismatched lengths,
/// fewer than two values; NumericalError (undefined correlation) for zero
/// variance in either input.
double pearson(std::span<const double> u, std::span<const double> v);

struct GaussianStats {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  std::size_t n = 0;
};

/// Sample mean and unbiased covariance, symmetrized as (C + C^T) / 2.
GaussianStats gaussian_stats(const std::vector<std::vector<double>>& features);

/// Squared Frechet distance between two Gaussians:
/// |mu1 - mu2|^2 + Tr(C1 + C2 - 2 (C1 C2)^{1/2}).
/// The trace of the square root is computed from the symmetric product
/// C1^{1/2} C2 C1^{1/2}, which shares its eigenvalues with C1 C2.
double frechet_distance(const GaussianStats& p, const GaussianStats& q);

/// Normalized intensity histograms of the non-overlapping patch x patch tiles.
std::vector<std::vector<double>> patch_histogram_features(const GrayImage& image, int patch, int bins);

enum class Binarization { otsu, fixed };

struct MetricSettings {
  SsimParams ssim;
  int otsu_bins = 256;
  Binarization binarization = Binarization::otsu;
  double fixed_threshold = 0.5;
  int feature_patch = 16;
  int feature_bins = 16;
};

BinaryTemplate binarize(const GrayImage& image, const MetricSettings& settings);

/// One row of an evaluation table. Column order: pFID x->z~, Hamming,
/// pFID z->x~, MSE, SSIM.
struct MetricReport {
  std::string model;
  double pfid_x2z = 0.0;
  double hamming = 0.0;
  double pfid_z2x = 0.0;
  double mse = 0.0;
  double ssim = 0.0;
};

/// Reference pairs (z, x) and a model's predictions: z~ estimated from x and
/// x~ generated from z. z~ must have the template geometry and x~ the image
/// geometry.
struct EvaluationSet {
  std::vector<BinaryTemplate> z;
  std::vector<GrayImage> x;
  std::vector<GrayImage> z_tilde;
  std::vector<GrayImage> x_tilde;
};

/// Hamming compares z against binarized z~; MSE and SSIM compare x against x~;
/// both pFID columns pool patch features over the whole set.
MetricReport evaluate(const std::string& model, const EvaluationSet& set, const MetricSettings& settings);

}  // namespace cdptwin::metrics
