#include "cdptwin/turbo.hpp"

#include <algorithm>
#include <cmath>

#include "cdptwin/error.hpp"
#include "fmt/format.h"

namespace cdptwin::turbo {

void TurboWeights::validate() const {
  for (double w : {lambda_t, lambda_d, lambda_r}) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ParameterError("turbo weights must be finite and non-negative");
  }
}

double l1_pairwise(const GrayImage& a, const GrayImage& b) {
  if (!a.same_shape(b)) throw ParameterError("l1_pairwise: dimension mismatch");
  auto pa = a.pixels();
  auto pb = b.pixels();
  double sum = 0.0;
  for (std::size_t i = 0; i < pa.size(); ++i) sum += std::abs(pa[i] - pb[i]);
  return sum / static_cast<double>(pa.size());
}

LossBreakdown compose(LossBreakdown terms, const TurboWeights& weights) {
  weights.validate();
  terms.total = (terms.l_z_tilde + terms.d_z_tilde) + weights.lambda_d * (terms.l_x_hat + terms.d_x_hat) +
                weights.lambda_t * (terms.l_x_tilde + terms.d_x_tilde) +
                weights.lambda_t * weights.lambda_r * (terms.l_z_hat + terms.d_z_hat);
  return terms;
}

namespace {

void check_tuple(const TurboTuple& t) {
  if (!t.z.same_shape(t.z_hat) || !t.z.same_shape(t.z_tilde)) {
    throw ParameterError("turbo tuple: z, z^ and z~ must share dimensions");
  }
  if (!t.x.same_shape(t.x_hat) || !t.x.same_shape(t.x_tilde)) {
    throw ParameterError("turbo tuple: x, x^ and x~ must share dimensions");
  }
}

LossBreakdown l1_terms(const TurboTuple& t) {
  check_tuple(t);
  LossBreakdown b;
  b.l_z_tilde = l1_pairwise(t.z, t.z_tilde);
  b.l_x_hat = l1_pairwise(t.x, t.x_hat);
  b.l_x_tilde = l1_pairwise(t.x, t.x_tilde);
  b.l_z_hat = l1_pairwise(t.z, t.z_hat);
  return b;
}

}  // namespace

LossBreakdown turbo_loss_unet(const TurboTuple& tuple, const TurboWeights& weights) {
  return compose(l1_terms(tuple), weights);
}

LossBreakdown turbo_loss_full(const TurboTuple& tuple, const TurboWeights& weights, const DivergencePlug& plug) {
  LossBreakdown b = l1_terms(tuple);
  if (plug) {
    b.d_z_tilde = plug(tuple.z, tuple.z_tilde);
    b.d_x_hat = plug(tuple.x, tuple.x_hat);
    b.d_x_tilde = plug(tuple.x, tuple.x_tilde);
    b.d_z_hat = plug(tuple.z, tuple.z_hat);
  }
  return compose(b, weights);
}

std::string breakdown_csv_header() {
  return "model,l_z_tilde,l_x_hat,l_x_tilde,l_z_hat,d_z_tilde,d_x_hat,d_x_tilde,d_z_hat,total\n";
}

std::string breakdown_csv_row(const std::string& model, const LossBreakdown& b) {
  return fmt::format("{},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g}\n", model,
                     b.l_z_tilde, b.l_x_hat, b.l_x_tilde, b.l_z_hat, b.d_z_tilde, b.d_x_hat, b.d_x_tilde, b.d_z_hat,
                     b.total);
}

double lower_median(std::vector<double> values) {
  if (values.empty()) throw ParameterError("median of an empty set");
  const std::size_t mid = (values.size() - 1) / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  return values[mid];
}

PatternGenerator::PatternGenerator(channel::Direction direction, int scale,
                                   std::array<double, channel::kPatternCount> values, double fallback)
    : direction_(direction), scale_(scale), values_(values), fallback_(fallback) {
  if (scale < 1) throw ParameterError("pattern generator scale must be >= 1");
  auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!in_unit(fallback) || !std::all_of(values_.begin(), values_.end(), in_unit)) {
    throw ParameterError("pattern generator values must lie in [0,1]");
  }
}

GrayImage PatternGenerator::render(const BinaryTemplate& conditioning, int scale) const {
  Field out(conditioning.width() * scale, conditioning.height() * scale, fallback_);
  for (int r = 1; r + 1 < conditioning.height(); ++r) {
    for (int c = 1; c + 1 < conditioning.width(); ++c) {
      const double v = value(channel::extract_pattern(conditioning, r, c));
      for (int dr = 0; dr < scale; ++dr) {
        for (int dc = 0; dc < scale; ++dc) out.at(r * scale + dr, c * scale + dc) = v;
      }
    }
  }
  return GrayImage(std::move(out));
}

GrayImage PatternGenerator::generate(const BinaryTemplate& z) const {
  if (direction_ != channel::Direction::print) throw UsageError("generating from a template needs a print-direction generator");
  return render(z, scale_);
}

GrayImage PatternGenerator::generate(const GrayImage& x) const {
  if (direction_ != channel::Direction::estimate) throw UsageError("generating from an image needs an estimate-direction generator");
  return render(channel::estimate_conditioning(x, scale_), 1);
}

PatternGenerator PatternGenerator::with_value(channel::PatternId id, double value) const {
  auto values = values_;
  values[static_cast<std::size_t>(id.value())] = value;
  return PatternGenerator(direction_, scale_, values, fallback_);
}

PatternGenerator fit_pattern_generator(std::span<const channel::TemplateImagePair> pairs, channel::Direction direction,
                                       int scale, Statistic statistic, channel::FitTarget target) {
  if (pairs.empty()) throw ParameterError("fit_pattern_generator: no training pairs");
  std::array<std::vector<double>, channel::kPatternCount> observed;
  std::vector<double> all;
  for (const auto& pair : pairs) {
    channel::for_each_observation(pair, direction, scale, target, [&](const channel::Observation& obs) {
      observed[static_cast<std::size_t>(obs.pattern.value())].push_back(obs.value);
      all.push_back(obs.value);
    });
  }
  if (all.empty()) throw ParameterError("fit_pattern_generator: templates too small to contain any 3x3 pattern");

  auto summarize = [statistic](std::vector<double> values) {
    if (statistic == Statistic::median) return lower_median(std::move(values));
    double sum = 0.0;
    for (double v : values) sum += v;
    return std::clamp(sum / static_cast<double>(values.size()), 0.0, 1.0);
  };
  const double fallback = summarize(all);
  std::array<double, channel::kPatternCount> values{};
  for (std::size_t p = 0; p < values.size(); ++p) {
    values[p] = observed[p].empty() ? fallback : summarize(std::move(observed[p]));
  }
  return PatternGenerator(direction, scale, values, fallback);
}

double pattern_l1_loss(const PatternGenerator& generator, std::span<const channel::TemplateImagePair> pairs,
                       channel::FitTarget target) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& pair : pairs) {
    channel::for_each_observation(pair, generator.direction(), generator.scale(), target,
                                  [&](const channel::Observation& obs) {
                                    sum += std::abs(generator.value(obs.pattern) - obs.value);
                                    ++count;
                                  });
  }
  if (count == 0) throw ParameterError("pattern_l1_loss: no observations");
  return sum / static_cast<double>(count);
}

}  // namespace cdptwin::turbo
