#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cdptwin/imaging.hpp"
#include "cdptwin/rng.hpp"

namespace cdptwin::ddpm {

/// beta_t, alpha_t = 1 - beta_t and alpha_bar_t = prod_{s<=t} alpha_s for
/// t = 1..T. Step indices are 1-based; alpha_bar(0) is 1 by convention.
class NoiseSchedule {
 public:
  /// Throws ParameterError unless every beta lies in (0, 1).
  explicit NoiseSchedule(std::vector<double> betas);

  int steps() const noexcept { return static_cast<int>(betas_.size()); }
  double beta(int t) const { return betas_[index(t)]; }
  double alpha(int t) const { return alphas_[index(t)]; }
  double alpha_bar(int t) const { return t == 0 ? 1.0 : alpha_bars_[index(t)]; }

  std::span<const double> betas() const noexcept { return betas_; }
  std::span<const double> alpha_bars() const noexcept { return alpha_bars_; }

 private:
  std::size_t index(int t) const;

  std::vector<double> betas_;
  std::vector<double> alphas_;
  std::vector<double> alpha_bars_;
};

/// Linearly spaced betas; both endpoints are reproduced exactly.
NoiseSchedule linear_schedule(double beta_start, double beta_end, int steps);

/// A diffusion step as seen by a denoiser: the index within the schedule
/// being run and its noise level.
struct Step {
  int t = 1;
  double alpha_bar = 1.0;
};

/// Predicts the noise in `noisy` given the conditioning image. Output has the
/// shape of `noisy` and is not clamped.
class Denoiser {
 public:
  virtual ~Denoiser() = default;
  virtual Field predict(const Field& noisy, const GrayImage& condition, Step step) const = 0;
};

/// Always predicts zero noise. The baseline every fitted denoiser must beat.
class ZeroDenoiser final : public Denoiser {
 public:
  Field predict(const Field& noisy, const GrayImage& condition, Step step) const override;
};

/// Per-noise-level affine map over local patches:
///   eps_hat(p) = A_b . [patch_r(noisy, p); patch_r(condition, p)] + c_b
/// Patches are (2r+1)^2 row-major windows with edge replication. Bucket b
/// covers training steps floor(bT/B)+1 .. floor((b+1)T/B) and is selected at
/// prediction time from the step's alpha_bar, so the denoiser can run under a
/// schedule other than the one it was fitted on.
class LinearDenoiser final : public Denoiser {
 public:
  struct Bucket {
    std::vector<double> weights;
    double bias = 0.0;
    /// Smallest training alpha_bar in the bucket.
    double alpha_bar_floor = 0.0;
    std::size_t rows = 0;

    bool operator==(const Bucket&) const = default;
  };

  LinearDenoiser(int patch_radius, std::vector<Bucket> buckets, bool regularized);

  int patch_radius() const noexcept { return patch_radius_; }
  std::size_t feature_count() const noexcept;
  std::span<const Bucket> buckets() const noexcept { return buckets_; }
  /// True when at least one bucket needed the ridge fallback.
  bool regularized() const noexcept { return regularized_; }

  std::size_t bucket_for(Step step) const noexcept;

  Field predict(const Field& noisy, const GrayImage& condition, Step step) const override;

  bool operator==(const LinearDenoiser& other) const {
    return patch_radius_ == other.patch_radius_ && buckets_ == other.buckets_ && regularized_ == other.regularized_;
  }

 private:
  int patch_radius_;
  std::vector<Bucket> buckets_;
  bool regularized_;
};

/// sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) eps. Not clamped.
Field forward_sample(const GrayImage& x0, int t, const Field& eps, const NoiseSchedule& schedule);

Field standard_normal_field(int width, int height, Rng& rng);

/// Monte-Carlo estimate of E_{t,eps} mean_pixels (eps - g(x_t, condition, t))^2
/// with t uniform on 1..T. Draw d uses the stream (seed, "ddpm_loss", d).
double ddpm_loss(const Denoiser& denoiser, const GrayImage& x0, const GrayImage& condition,
                 const NoiseSchedule& schedule, std::size_t batch, std::uint64_t seed);

enum class ReverseVariance {
  /// beta_t (1 - alpha_bar_{t-1}) / (1 - alpha_bar_t)
  posterior,
  /// beta_t
  beta,
};

/// One ancestral step:
///   x_{t-1} = (x_t - beta_t / sqrt(1 - alpha_bar_t) eps_hat) / sqrt(alpha_t) + sigma_t noise
/// `noise` may be null (deterministic step); it is ignored at t = 1.
Field reverse_step(const Field& xt, const Field& eps_hat, int t, const NoiseSchedule& schedule, const Field* noise,
                   ReverseVariance variance = ReverseVariance::posterior);

struct SampleOptions {
  bool clamp = true;
  ReverseVariance variance = ReverseVariance::posterior;
};

/// k independent reverse runs from x_T ~ N(0, I). Realization r uses the
/// stream (seed, "ddpm_sample", r). Outputs are clamped to [0,1] only at the
/// end, and only when options.clamp is set.
std::vector<Field> sample(const Denoiser& denoiser, const GrayImage& condition, const NoiseSchedule& schedule,
                          std::size_t k, std::uint64_t seed, const SampleOptions& options = {});

/// sample() with clamping, packaged as a stack.
RealizationStack sample_stack(const Denoiser& denoiser, const GrayImage& condition, const NoiseSchedule& schedule,
                              std::size_t k, std::uint64_t seed, ReverseVariance variance = ReverseVariance::posterior);

struct DenoiserPair {
  GrayImage condition;
  GrayImage target;
};

struct LinearFitOptions {
  int buckets = 8;
  int patch_radius = 1;
  std::size_t samples_per_pair = 16;
  std::uint64_t seed = 0;
};

/// Least-squares fit of each bucket's affine map over sampled (t, eps) draws.
/// Draw g = pair * samples_per_pair + s uses the stream (seed, "denoiser_fit", g).
/// Rank-deficient normal equations get a 1e-8 ridge and set regularized().
LinearDenoiser fit_linear_denoiser(std::span<const DenoiserPair> pairs, const NoiseSchedule& schedule,
                                   const LinearFitOptions& options);

std::string to_json(const LinearDenoiser& denoiser);
LinearDenoiser linear_denoiser_from_json(std::string_view text);
void save_denoiser(const std::filesystem::path& path, const LinearDenoiser& denoiser);
LinearDenoiser load_denoiser(const std::filesystem::path& path);

}  // namespace cdptwin::ddpm
