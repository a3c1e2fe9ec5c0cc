#include "cdptwin/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cdptwin/error.hpp"

namespace cdptwin::metrics {
namespace {

void require_same_shape(const GrayImage& a, const GrayImage& b, const char* op) {
  if (!a.same_shape(b)) {
    throw ParameterError(std::string(op) + ": dimension mismatch " + std::to_string(a.width()) + "x" +
                         std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                         std::to_string(b.height()));
  }
}

void require_bins(int bins) {
  if (bins < 2) throw ParameterError("histogram needs at least 2 bins, got " + std::to_string(bins));
}

}  // namespace

double mse(const GrayImage& a, const GrayImage& b) {
  require_same_shape(a, b, "mse");
  auto pa = a.pixels();
  auto pb = b.pixels();
  double sum = 0.0;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    const double d = pa[i] - pb[i];
    sum += d * d;
  }
  return sum / static_cast<double>(pa.size());
}

int histogram_bin(double value, int bins) {
  const int bin = static_cast<int>(value * bins);
  return std::clamp(bin, 0, bins - 1);
}

OtsuResult otsu_threshold(const GrayImage& image, int bins) {
  require_bins(bins);
  if (image.size() == 0) throw ParameterError("otsu_threshold: empty image");

  std::vector<std::size_t> counts(static_cast<std::size_t>(bins), 0);
  std::vector<double> sums(static_cast<std::size_t>(bins), 0.0);
  for (double v : image.pixels()) {
    const auto b = static_cast<std::size_t>(histogram_bin(v, bins));
    ++counts[b];
    sums[b] += v;
  }

  const auto occupied = std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; });
  if (occupied < 2) {
    const auto only = std::find_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; });
    const int bin = static_cast<int>(only - counts.begin()) + 1;
    return OtsuResult{static_cast<double>(bin) / bins, bin, true};
  }

  const double total_count = static_cast<double>(image.size());
  double total_sum = 0.0;
  for (double s : sums) total_sum += s;

  std::size_t below_count = 0;
  double below_sum = 0.0;
  double best_variance = -1.0;
  int best_bin = 1;
  for (int k = 1; k < bins; ++k) {
    below_count += counts[static_cast<std::size_t>(k - 1)];
    below_sum += sums[static_cast<std::size_t>(k - 1)];
    const std::size_t above_count = image.size() - below_count;
    if (below_count == 0 || above_count == 0) continue;
    const double w0 = static_cast<double>(below_count) / total_count;
    const double w1 = static_cast<double>(above_count) / total_count;
    const double mu0 = below_sum / static_cast<double>(below_count);
    const double mu1 = (total_sum - below_sum) / static_cast<double>(above_count);
    const double variance = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
    if (variance > best_variance) {
      best_variance = variance;
      best_bin = k;
    }
  }
  return OtsuResult{static_cast<double>(best_bin) / bins, best_bin, false};
}

BinaryTemplate binarize(const GrayImage& image, const OtsuResult& threshold, int bins) {
  Grid<std::uint8_t> out(image.width(), image.height());
  auto in = image.pixels();
  auto bits = out.values();
  for (std::size_t i = 0; i < in.size(); ++i) bits[i] = histogram_bin(in[i], bins) >= threshold.bin ? 1 : 0;
  return BinaryTemplate(std::move(out));
}

BinaryTemplate otsu_binarize(const GrayImage& image, int bins) {
  return binarize(image, otsu_threshold(image, bins), bins);
}

BinaryTemplate fixed_binarize(const GrayImage& image, double threshold) {
  Grid<std::uint8_t> out(image.width(), image.height());
  auto in = image.pixels();
  auto bits = out.values();
  for (std::size_t i = 0; i < in.size(); ++i) bits[i] = in[i] >= threshold ? 1 : 0;
  return BinaryTemplate(std::move(out));
}

BinaryTemplate binarize(const GrayImage& image, const MetricSettings& settings) {
  if (settings.binarization == Binarization::fixed) return fixed_binarize(image, settings.fixed_threshold);
  return otsu_binarize(image, settings.otsu_bins);
}

double hamming(const BinaryTemplate& a, const BinaryTemplate& b) {
  if (!a.same_shape(b)) throw ParameterError("hamming: dimension mismatch");
  auto pa = a.bits();
  auto pb = b.bits();
  std::size_t differing = 0;
  for (std::size_t i = 0; i < pa.size(); ++i) differing += pa[i] != pb[i] ? 1U : 0U;
  return static_cast<double>(differing) / static_cast<double>(pa.size());
}

double hamming(const GrayImage& a, const GrayImage& b) {
  require_same_shape(a, b, "hamming");
  // from_gray rejects anything that is not exactly 0 or 1.
  return hamming(BinaryTemplate::from_gray(a), BinaryTemplate::from_gray(b));
}

std::vector<double> gaussian_window(int size, double sigma) {
  if (size < 1 || size % 2 == 0) throw ParameterError("gaussian window size must be odd and positive");
  if (!(sigma > 0.0)) throw ParameterError("gaussian window sigma must be positive");
  std::vector<double> taps(static_cast<std::size_t>(size));
  const int half = size / 2;
  double total = 0.0;
  for (int i = 0; i < size; ++i) {
    const double d = i - half;
    taps[static_cast<std::size_t>(i)] = std::exp(-(d * d) / (2.0 * sigma * sigma));
    total += taps[static_cast<std::size_t>(i)];
  }
  for (double& t : taps) t /= total;
  return taps;
}

namespace {

/// Separable "valid" filtering of a row-major field.
std::vector<double> filter_valid(std::span<const double> in, int width, int height, const std::vector<double>& taps) {
  const int n = static_cast<int>(taps.size());
  const int out_w = width - n + 1;
  const int out_h = height - n + 1;
  std::vector<double> horizontal(static_cast<std::size_t>(out_w) * height);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < out_w; ++c) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i) acc += taps[static_cast<std::size_t>(i)] * in[static_cast<std::size_t>(r) * width + c + i];
      horizontal[static_cast<std::size_t>(r) * out_w + c] = acc;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(out_w) * out_h);
  for (int r = 0; r < out_h; ++r) {
    for (int c = 0; c < out_w; ++c) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i) acc += taps[static_cast<std::size_t>(i)] * horizontal[static_cast<std::size_t>(r + i) * out_w + c];
      out[static_cast<std::size_t>(r) * out_w + c] = acc;
    }
  }
  return out;
}

}  // namespace

double ssim(const GrayImage& a, const GrayImage& b, const SsimParams& params) {
  require_same_shape(a, b, "ssim");
  if (a.width() < params.window || a.height() < params.window) {
    throw ParameterError("ssim: image smaller than the " + std::to_string(params.window) + "x" +
                         std::to_string(params.window) + " window");
  }
  const auto taps = gaussian_window(params.window, params.sigma);
  const double c1 = (params.k1 * params.dynamic_range) * (params.k1 * params.dynamic_range);
  const double c2 = (params.k2 * params.dynamic_range) * (params.k2 * params.dynamic_range);

  auto pa = a.pixels();
  auto pb = b.pixels();
  std::vector<double> aa(pa.size()), bb(pa.size()), ab(pa.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    aa[i] = pa[i] * pa[i];
    bb[i] = pb[i] * pb[i];
    ab[i] = pa[i] * pb[i];
  }
  const int w = a.width();
  const int h = a.height();
  const auto mu_a = filter_valid(pa, w, h, taps);
  const auto mu_b = filter_valid(pb, w, h, taps);
  const auto e_aa = filter_valid(aa, w, h, taps);
  const auto e_bb = filter_valid(bb, w, h, taps);
  const auto e_ab = filter_valid(ab, w, h, taps);

  double total = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double var_a = e_aa[i] - mu_a[i] * mu_a[i];
    const double var_b = e_bb[i] - mu_b[i] * mu_b[i];
    const double cov = e_ab[i] - mu_a[i] * mu_b[i];
    const double num = (2.0 * mu_a[i] * mu_b[i] + c1) * (2.0 * cov + c2);
    const double den = (mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (var_a + var_b + c2);
    total += num / den;
  }
  return total / static_cast<double>(mu_a.size());
}

double pearson(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw ParameterError("pearson: length mismatch");
  if (u.size() < 2) throw ParameterError("pearson: need at least two values");
  const double n = static_cast<double>(u.size());
  double mean_u = 0.0;
  double mean_v = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    mean_u += u[i];
    mean_v += v[i];
  }
  mean_u /= n;
  mean_v /= n;
  double suu = 0.0;
  double svv = 0.0;
  double suv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double du = u[i] - mean_u;
    const double dv = v[i] - mean_v;
    suu += du * du;
    svv += dv * dv;
    suv += du * dv;
  }
  if (suu == 0.0 || svv == 0.0) throw NumericalError("pearson: undefined correlation (zero variance)");
  return std::clamp(suv / std::sqrt(suu * svv), -1.0, 1.0);
}

std::vector<std::vector<double>> patch_histogram_features(const GrayImage& image, int patch, int bins) {
  if (patch < 1 || patch > std::min(image.width(), image.height())) {
    throw ParameterError("patch size " + std::to_string(patch) + " does not fit a " +
                         std::to_string(image.width()) + "x" + std::to_string(image.height()) + " image");
  }
  if (bins < 1) throw ParameterError("feature histogram needs at least one bin");
  const int rows = image.height() / patch;
  const int cols = image.width() / patch;
  const double norm = 1.0 / (static_cast<double>(patch) * patch);
  std::vector<std::vector<double>> features;
  features.reserve(static_cast<std::size_t>(rows) * cols);
  for (int pr = 0; pr < rows; ++pr) {
    for (int pc = 0; pc < cols; ++pc) {
      std::vector<double> hist(static_cast<std::size_t>(bins), 0.0);
      for (int r = 0; r < patch; ++r) {
        for (int c = 0; c < patch; ++c) {
          const double v = image.at(pr * patch + r, pc * patch + c);
          hist[static_cast<std::size_t>(std::clamp(static_cast<int>(v * bins), 0, bins - 1))] += norm;
        }
      }
      features.push_back(std::move(hist));
    }
  }
  return features;
}

MetricReport evaluate(const std::string& model, const EvaluationSet& set, const MetricSettings& settings) {
  const std::size_t n = set.z.size();
  if (n == 0) throw ParameterError("evaluate: empty evaluation set");
  if (set.x.size() != n || set.z_tilde.size() != n || set.x_tilde.size() != n) {
    throw ParameterError("evaluate: z, x, z~ and x~ must have the same count");
  }

  MetricReport report;
  report.model = model;
  std::vector<std::vector<double>> f_z, f_zt, f_x, f_xt;
  auto append = [&](std::vector<std::vector<double>>& dst, const GrayImage& img) {
    auto f = patch_histogram_features(img, settings.feature_patch, settings.feature_bins);
    dst.insert(dst.end(), std::make_move_iterator(f.begin()), std::make_move_iterator(f.end()));
  };

  for (std::size_t i = 0; i < n; ++i) {
    if (set.z_tilde[i].width() != set.z[i].width() || set.z_tilde[i].height() != set.z[i].height()) {
      throw ParameterError("evaluate: z~ geometry differs from z for item " + std::to_string(i));
    }
    report.hamming += hamming(set.z[i], binarize(set.z_tilde[i], settings));
    report.mse += mse(set.x[i], set.x_tilde[i]);
    report.ssim += ssim(set.x[i], set.x_tilde[i], settings.ssim);
    append(f_z, set.z[i].to_gray());
    append(f_zt, set.z_tilde[i]);
    append(f_x, set.x[i]);
    append(f_xt, set.x_tilde[i]);
  }
  const double count = static_cast<double>(n);
  report.hamming /= count;
  report.mse /= count;
  report.ssim /= count;
  report.pfid_x2z = frechet_distance(gaussian_stats(f_z), gaussian_stats(f_zt));
  report.pfid_z2x = frechet_distance(gaussian_stats(f_x), gaussian_stats(f_xt));
  return report;
}

}  // namespace cdptwin::metrics
