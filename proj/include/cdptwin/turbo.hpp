#pragma once

#include <array>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cdptwin/channel.hpp"
#include "cdptwin/imaging.hpp"

namespace cdptwin::turbo {

/// Trade-off weights of the two-path objective.
struct TurboWeights {
  double lambda_t = 1.0;
  double lambda_d = 1.0;
  double lambda_r = 1.0;

  /// Throws ParameterError on a negative or non-finite weight.
  void validate() const;
};

/// Templates z and images x with their reconstructions (hat) and generated
/// counterparts (tilde).
struct TurboTuple {
  GrayImage z;
  GrayImage z_hat;
  GrayImage z_tilde;
  GrayImage x;
  GrayImage x_hat;
  GrayImage x_tilde;
};

struct LossBreakdown {
  double l_z_tilde = 0.0;
  double l_x_hat = 0.0;
  double l_x_tilde = 0.0;
  double l_z_hat = 0.0;
  double d_z_tilde = 0.0;
  double d_x_hat = 0.0;
  double d_x_tilde = 0.0;
  double d_z_hat = 0.0;
  double total = 0.0;
};

/// Scalar stand-in for a distribution-matching term D(a, b).
using DivergencePlug = std::function<double(const GrayImage&, const GrayImage&)>;

/// Mean absolute pixel difference.
double l1_pairwise(const GrayImage& a, const GrayImage& b);

/// Sets `terms.total` from its eight terms. Position weights, in the order
/// (z~, x^, x~, z^), are (1, lambda_D, lambda_T, lambda_T * lambda_R); each
/// position contributes weight * (l1 term + divergence term).
LossBreakdown compose(LossBreakdown terms, const TurboWeights& weights);

/// L(z,z~) + lD L(x,x^) + lT L(x,x~) + lT lR L(z,z^). Divergence terms are zero.
LossBreakdown turbo_loss_unet(const TurboTuple& tuple, const TurboWeights& weights);

/// As turbo_loss_unet plus plug(a, b) at every position, with the same weights.
LossBreakdown turbo_loss_full(const TurboTuple& tuple, const TurboWeights& weights, const DivergencePlug& plug);

std::string breakdown_csv_header();
std::string breakdown_csv_row(const std::string& model, const LossBreakdown& b);

enum class Statistic { median, mean };

/// Lower median: the order statistic floor((n+1)/2) (1-based).
double lower_median(std::vector<double> values);

/// Deterministic per-pattern generator: one output value per pattern, the
/// pattern-constant predictor minimizing the training l1 loss when the
/// statistic is the median.
class PatternGenerator {
 public:
  PatternGenerator(channel::Direction direction, int scale, std::array<double, channel::kPatternCount> values,
                   double fallback);

  channel::Direction direction() const noexcept { return direction_; }
  int scale() const noexcept { return scale_; }
  double value(channel::PatternId id) const { return values_[static_cast<std::size_t>(id.value())]; }
  double fallback() const noexcept { return fallback_; }

  /// Print direction: the s x s-upsampled image for template z.
  GrayImage generate(const BinaryTemplate& z) const;
  /// Estimate direction: the template estimate for image x.
  GrayImage generate(const GrayImage& x) const;

  /// Copy with one pattern's output replaced.
  PatternGenerator with_value(channel::PatternId id, double value) const;

 private:
  GrayImage render(const BinaryTemplate& conditioning, int scale) const;

  channel::Direction direction_;
  int scale_;
  std::array<double, channel::kPatternCount> values_;
  double fallback_;
};

/// Per-pattern median (or mean) of the observations; unobserved patterns and
/// border pixels use the statistic over all observations.
PatternGenerator fit_pattern_generator(std::span<const channel::TemplateImagePair> pairs, channel::Direction direction,
                                       int scale, Statistic statistic = Statistic::median,
                                       channel::FitTarget target = channel::FitTarget::center);

/// Mean |value(pattern) - observed value| over the training observations.
double pattern_l1_loss(const PatternGenerator& generator, std::span<const channel::TemplateImagePair> pairs,
                       channel::FitTarget target = channel::FitTarget::center);

}  // namespace cdptwin::turbo
