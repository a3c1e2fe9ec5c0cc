#include "cdptwin/ddpm.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "cdptwin/error.hpp"
#include "cdptwin/parallel.hpp"

namespace cdptwin::ddpm {

NoiseSchedule::NoiseSchedule(std::vector<double> betas) : betas_(std::move(betas)) {
  if (betas_.empty()) throw ParameterError("noise schedule needs at least one step");
  alphas_.reserve(betas_.size());
  alpha_bars_.reserve(betas_.size());
  double running = 1.0;
  for (double b : betas_) {
    if (!(b > 0.0 && b < 1.0)) throw ParameterError("noise schedule beta outside (0,1): " + std::to_string(b));
    alphas_.push_back(1.0 - b);
    running *= 1.0 - b;
    alpha_bars_.push_back(running);
  }
}

std::size_t NoiseSchedule::index(int t) const {
  if (t < 1 || t > steps()) {
    throw ParameterError("step " + std::to_string(t) + " outside 1.." + std::to_string(steps()));
  }
  return static_cast<std::size_t>(t - 1);
}

NoiseSchedule linear_schedule(double beta_start, double beta_end, int steps) {
  if (steps < 1) throw ParameterError("schedule step count must be >= 1");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
    throw ParameterError("linear schedule needs 0 < beta_start <= beta_end < 1");
  }
  std::vector<double> betas(static_cast<std::size_t>(steps));
  if (steps == 1) {
    betas[0] = beta_start;
  } else {
    for (int t = 1; t <= steps; ++t) {
      const double f = static_cast<double>(t - 1) / static_cast<double>(steps - 1);
      betas[static_cast<std::size_t>(t - 1)] = (1.0 - f) * beta_start + f * beta_end;
    }
  }
  return NoiseSchedule(std::move(betas));
}

Field ZeroDenoiser::predict(const Field& noisy, const GrayImage&, Step) const {
  return Field(noisy.width(), noisy.height(), 0.0);
}

LinearDenoiser::LinearDenoiser(int patch_radius, std::vector<Bucket> buckets, bool regularized)
    : patch_radius_(patch_radius), buckets_(std::move(buckets)), regularized_(regularized) {
  if (patch_radius < 0) throw ParameterError("patch radius must be >= 0");
  if (buckets_.empty()) throw ParameterError("linear denoiser needs at least one bucket");
  for (const auto& b : buckets_) {
    if (b.weights.size() != feature_count()) throw ParameterError("linear denoiser bucket has the wrong weight count");
  }
}

std::size_t LinearDenoiser::feature_count() const noexcept {
  const auto side = static_cast<std::size_t>(2 * patch_radius_ + 1);
  return 2 * side * side;
}

std::size_t LinearDenoiser::bucket_for(Step step) const noexcept {
  for (std::size_t b = 0; b < buckets_.size(); ++b) {
    if (step.alpha_bar >= buckets_[b].alpha_bar_floor) return b;
  }
  return buckets_.size() - 1;
}

namespace {

void require_same_shape(const Field& a, const Field& b, const char* op) {
  if (!a.same_shape(b)) throw ParameterError(std::string(op) + ": dimension mismatch");
}

/// Writes the features of pixel (r, c) into `out`: noisy patch then
/// condition patch, row-major, edge-replicated.
void gather_features(const Field& noisy, const Field& condition, int radius, int r, int c, double* out) {
  const int w = noisy.width();
  const int h = noisy.height();
  std::size_t k = 0;
  const std::size_t half = static_cast<std::size_t>(2 * radius + 1) * static_cast<std::size_t>(2 * radius + 1);
  for (int dr = -radius; dr <= radius; ++dr) {
    const int rr = std::clamp(r + dr, 0, h - 1);
    for (int dc = -radius; dc <= radius; ++dc) {
      const int cc = std::clamp(c + dc, 0, w - 1);
      out[k] = noisy.at(rr, cc);
      out[k + half] = condition.at(rr, cc);
      ++k;
    }
  }
}

}  // namespace

Field LinearDenoiser::predict(const Field& noisy, const GrayImage& condition, Step step) const {
  require_same_shape(noisy, condition.field(), "LinearDenoiser::predict");
  const Bucket& bucket = buckets_[bucket_for(step)];
  std::vector<double> features(feature_count());
  Field out(noisy.width(), noisy.height());
  for (int r = 0; r < noisy.height(); ++r) {
    for (int c = 0; c < noisy.width(); ++c) {
      gather_features(noisy, condition.field(), patch_radius_, r, c, features.data());
      double acc = bucket.bias;
      for (std::size_t i = 0; i < features.size(); ++i) acc += bucket.weights[i] * features[i];
      out.at(r, c) = acc;
    }
  }
  return out;
}

Field forward_sample(const GrayImage& x0, int t, const Field& eps, const NoiseSchedule& schedule) {
  require_same_shape(x0.field(), eps, "forward_sample");
  if (t < 1) throw ParameterError("forward_sample: step must be >= 1");
  const double ab = schedule.alpha_bar(t);
  const double signal = std::sqrt(ab);
  const double noise = std::sqrt(1.0 - ab);
  Field out(eps.width(), eps.height());
  auto in = x0.pixels();
  auto e = eps.values();
  auto o = out.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = signal * in[i] + noise * e[i];
  return out;
}

Field standard_normal_field(int width, int height, Rng& rng) {
  Field out(width, height);
  for (double& v : out.values()) v = rng.normal();
  return out;
}

double ddpm_loss(const Denoiser& denoiser, const GrayImage& x0, const GrayImage& condition,
                 const NoiseSchedule& schedule, std::size_t batch, std::uint64_t seed) {
  if (batch < 1) throw ParameterError("ddpm_loss: batch must be >= 1");
  require_same_shape(x0.field(), condition.field(), "ddpm_loss");
  std::vector<double> per_draw(batch, 0.0);
  parallel_for(batch, [&](std::size_t d) {
    Rng rng(seed, "ddpm_loss", d);
    const int t = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(schedule.steps())));
    const Field eps = standard_normal_field(x0.width(), x0.height(), rng);
    const Field noisy = forward_sample(x0, t, eps, schedule);
    const Field predicted = denoiser.predict(noisy, condition, Step{t, schedule.alpha_bar(t)});
    require_same_shape(predicted, eps, "ddpm_loss: denoiser output");
    double sum = 0.0;
    auto e = eps.values();
    auto p = predicted.values();
    for (std::size_t i = 0; i < e.size(); ++i) sum += (e[i] - p[i]) * (e[i] - p[i]);
    per_draw[d] = sum / static_cast<double>(e.size());
  });
  double total = 0.0;
  for (double v : per_draw) total += v;
  return total / static_cast<double>(batch);
}

Field reverse_step(const Field& xt, const Field& eps_hat, int t, const NoiseSchedule& schedule, const Field* noise,
                   ReverseVariance variance) {
  if (t < 1) throw ParameterError("reverse_step: step must be >= 1, got " + std::to_string(t));
  require_same_shape(xt, eps_hat, "reverse_step");
  const double beta = schedule.beta(t);
  const double alpha = schedule.alpha(t);
  const double ab = schedule.alpha_bar(t);
  const double ab_prev = schedule.alpha_bar(t - 1);
  const double eps_coef = beta / std::sqrt(1.0 - ab);
  const double inv_sqrt_alpha = 1.0 / std::sqrt(alpha);

  double sigma = 0.0;
  const bool noisy = noise != nullptr && t > 1;
  if (noisy) {
    require_same_shape(xt, *noise, "reverse_step noise");
    const double var = variance == ReverseVariance::posterior ? beta * (1.0 - ab_prev) / (1.0 - ab) : beta;
    sigma = std::sqrt(var);
  }

  Field out(xt.width(), xt.height());
  auto x = xt.values();
  auto e = eps_hat.values();
  auto o = out.values();
  for (std::size_t i = 0; i < o.size(); ++i) {
    o[i] = inv_sqrt_alpha * (x[i] - eps_coef * e[i]);
    if (noisy) o[i] += sigma * noise->values()[i];
  }
  return out;
}

std::vector<Field> sample(const Denoiser& denoiser, const GrayImage& condition, const NoiseSchedule& schedule,
                          std::size_t k, std::uint64_t seed, const SampleOptions& options) {
  if (k < 1) throw ParameterError("sample: k must be >= 1");
  std::vector<Field> outputs(k);
  parallel_for(k, [&](std::size_t r) {
    Rng rng(seed, "ddpm_sample", r);
    Field x = standard_normal_field(condition.width(), condition.height(), rng);
    for (int t = schedule.steps(); t >= 1; --t) {
      const Field eps_hat = denoiser.predict(x, condition, Step{t, schedule.alpha_bar(t)});
      if (t > 1) {
        const Field noise = standard_normal_field(x.width(), x.height(), rng);
        x = reverse_step(x, eps_hat, t, schedule, &noise, options.variance);
      } else {
        x = reverse_step(x, eps_hat, t, schedule, nullptr, options.variance);
      }
    }
    if (options.clamp) {
      for (double& v : x.values()) v = std::clamp(v, 0.0, 1.0);
    }
    outputs[r] = std::move(x);
  });
  return outputs;
}

RealizationStack sample_stack(const Denoiser& denoiser, const GrayImage& condition, const NoiseSchedule& schedule,
                              std::size_t k, std::uint64_t seed, ReverseVariance variance) {
  auto fields = sample(denoiser, condition, schedule, k, seed, SampleOptions{true, variance});
  std::vector<GrayImage> images;
  images.reserve(fields.size());
  for (auto& f : fields) images.push_back(GrayImage::clamped(std::move(f)));
  return RealizationStack(std::move(images));
}

LinearDenoiser fit_linear_denoiser(std::span<const DenoiserPair> pairs, const NoiseSchedule& schedule,
                                   const LinearFitOptions& options) {
  if (pairs.empty()) throw ParameterError("fit_linear_denoiser: no training pairs");
  if (options.patch_radius < 0) throw ParameterError("fit_linear_denoiser: patch radius must be >= 0");
  if (options.buckets < 1 || options.buckets > schedule.steps()) {
    throw ParameterError("fit_linear_denoiser: bucket count must lie in 1..T");
  }
  if (options.samples_per_pair < 1) throw ParameterError("fit_linear_denoiser: samples_per_pair must be >= 1");
  for (const auto& p : pairs) {
    if (!p.condition.same_shape(p.target)) throw ParameterError("fit_linear_denoiser: condition/target size mismatch");
  }

  const int steps = schedule.steps();
  const auto bucket_count = static_cast<std::size_t>(options.buckets);
  const std::size_t side = static_cast<std::size_t>(2 * options.patch_radius + 1);
  const auto features = static_cast<Eigen::Index>(2 * side * side);
  const Eigen::Index dim = features + 1;

  auto bucket_of_step = [&](int t) {
    // Largest b with floor(b T / B) < t.
    return static_cast<std::size_t>((static_cast<long long>(t) * options.buckets - 1) / steps);
  };

  std::vector<Eigen::MatrixXd> gram(bucket_count, Eigen::MatrixXd::Zero(dim, dim));
  std::vector<Eigen::VectorXd> moment(bucket_count, Eigen::VectorXd::Zero(dim));
  std::vector<std::size_t> rows(bucket_count, 0);

  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const GrayImage& target = pairs[p].target;
    const Field& condition = pairs[p].condition.field();
    const auto pixels = static_cast<Eigen::Index>(target.size());
    Eigen::MatrixXd design(pixels, dim);
    Eigen::VectorXd response(pixels);
    std::vector<double> feat(static_cast<std::size_t>(features));
    for (std::size_t s = 0; s < options.samples_per_pair; ++s) {
      Rng rng(options.seed, "denoiser_fit", p * options.samples_per_pair + s);
      const int t = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(steps)));
      const Field eps = standard_normal_field(target.width(), target.height(), rng);
      const Field noisy = forward_sample(target, t, eps, schedule);
      Eigen::Index row = 0;
      for (int r = 0; r < target.height(); ++r) {
        for (int c = 0; c < target.width(); ++c, ++row) {
          gather_features(noisy, condition, options.patch_radius, r, c, feat.data());
          for (Eigen::Index j = 0; j < features; ++j) design(row, j) = feat[static_cast<std::size_t>(j)];
          design(row, features) = 1.0;
          response(row) = eps.at(r, c);
        }
      }
      const std::size_t b = bucket_of_step(t);
      gram[b].selfadjointView<Eigen::Lower>().rankUpdate(design.transpose());
      moment[b].noalias() += design.transpose() * response;
      rows[b] += static_cast<std::size_t>(pixels);
    }
  }

  bool regularized = false;
  std::vector<LinearDenoiser::Bucket> buckets(bucket_count);
  for (std::size_t b = 0; b < bucket_count; ++b) {
    auto& out = buckets[b];
    const int last_step = static_cast<int>(((b + 1) * static_cast<std::size_t>(steps)) / bucket_count);
    out.alpha_bar_floor = schedule.alpha_bar(last_step);
    out.rows = rows[b];
    out.weights.assign(static_cast<std::size_t>(features), 0.0);
    if (rows[b] == 0) continue;

    Eigen::MatrixXd g = gram[b].selfadjointView<Eigen::Lower>();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g, Eigen::EigenvaluesOnly);
    const double largest = eig.eigenvalues().maxCoeff();
    const double smallest = eig.eigenvalues().minCoeff();
    if (eig.info() != Eigen::Success || smallest <= 1e-12 * std::max(largest, 1.0)) {
      g.diagonal().array() += 1e-8;
      regularized = true;
    }
    const Eigen::VectorXd solution = g.ldlt().solve(moment[b]);
    if (!solution.allFinite()) throw NumericalError("fit_linear_denoiser: least-squares solve failed");
    for (Eigen::Index j = 0; j < features; ++j) out.weights[static_cast<std::size_t>(j)] = solution(j);
    out.bias = solution(features);
  }
  return LinearDenoiser(options.patch_radius, std::move(buckets), regularized);
}

}  // namespace cdptwin::ddpm
