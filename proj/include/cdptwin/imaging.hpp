#pragma once

#include <cstddef>
#include <cstdint>
#include <algorithm>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cdptwin/error.hpp"

namespace cdptwin {

/// Row-major 2-D array. The building block for every image type.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int width, int height, T fill = T{})
      : width_(width),
        height_(height),
        values_(static_cast<std::size_t>(std::max(width, 0)) * static_cast<std::size_t>(std::max(height, 0)),
                fill) {
    if (width < 0 || height < 0) throw ParameterError("grid dimensions must be non-negative");
  }

  Grid(int width, int height, std::vector<T> values)
      : width_(width), height_(height), values_(std::move(values)) {
    if (width < 0 || height < 0 ||
        values_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
      throw ParameterError("grid value count does not match " + std::to_string(width) + "x" +
                           std::to_string(height));
    }
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  T& at(int row, int col) { return values_[index(row, col)]; }
  const T& at(int row, int col) const { return values_[index(row, col)]; }

  std::span<T> values() noexcept { return values_; }
  std::span<const T> values() const noexcept { return values_; }

  bool same_shape(const Grid& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }

  bool operator==(const Grid&) const = default;

 private:
  std::size_t index(int row, int col) const noexcept {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(col);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> values_;
};

/// Unconstrained real field: diffusion states, noise, predicted noise.
using Field = Grid<double>;

/// Continuous grayscale image with every pixel in [0, 1].
class GrayImage {
 public:
  GrayImage() = default;
  /// Throws ParameterError unless dimensions are positive and every value is
  /// a finite number in [0, 1].
  explicit GrayImage(Field pixels);
  GrayImage(int width, int height, double fill);

  /// Clamps each value into [0, 1]. NaN is rejected.
  static GrayImage clamped(Field pixels);

  int width() const noexcept { return pixels_.width(); }
  int height() const noexcept { return pixels_.height(); }
  std::size_t size() const noexcept { return pixels_.size(); }
  double at(int row, int col) const { return pixels_.at(row, col); }
  std::span<const double> pixels() const noexcept { return pixels_.values(); }
  const Field& field() const noexcept { return pixels_; }
  bool same_shape(const GrayImage& other) const noexcept { return pixels_.same_shape(other.pixels_); }

  bool operator==(const GrayImage&) const = default;

 private:
  Field pixels_;
};

/// Binary digital template (or any binarized field): every element is 0 or 1.
class BinaryTemplate {
 public:
  BinaryTemplate() = default;
  /// Throws ParameterError unless dimensions are positive and all bits are 0/1.
  explicit BinaryTemplate(Grid<std::uint8_t> bits);

  /// Accepts a gray image whose pixels are exactly 0.0 or 1.0.
  static BinaryTemplate from_gray(const GrayImage& image);

  int width() const noexcept { return bits_.width(); }
  int height() const noexcept { return bits_.height(); }
  std::size_t size() const noexcept { return bits_.size(); }
  std::uint8_t at(int row, int col) const { return bits_.at(row, col); }
  std::span<const std::uint8_t> bits() const noexcept { return bits_.values(); }
  bool same_shape(const BinaryTemplate& other) const noexcept { return bits_.same_shape(other.bits_); }

  GrayImage to_gray() const;
  BinaryTemplate complement() const;

  bool operator==(const BinaryTemplate&) const = default;

 private:
  Grid<std::uint8_t> bits_;
};

/// K realizations of the same stochastic output.
class RealizationStack {
 public:
  /// Throws ParameterError when empty or when shapes differ.
  explicit RealizationStack(std::vector<GrayImage> images);

  std::size_t k() const noexcept { return images_.size(); }
  int width() const noexcept { return images_.front().width(); }
  int height() const noexcept { return images_.front().height(); }
  const GrayImage& operator[](std::size_t i) const { return images_[i]; }
  std::span<const GrayImage> images() const noexcept { return images_; }

  /// The first `count` realizations, in order.
  RealizationStack prefix(std::size_t count) const;

  bool operator==(const RealizationStack&) const = default;

 private:
  std::vector<GrayImage> images_;
};

/// Independent Bernoulli(density) bits, fully determined by `seed`.
BinaryTemplate generate_template(int width, int height, double density, std::uint64_t seed);

/// Replicates each pixel into a scale x scale block.
BinaryTemplate upscale(const BinaryTemplate& source, int scale);
GrayImage upscale(const GrayImage& source, int scale);

/// Each output pixel is the mean of its scale x scale source block.
GrayImage block_mean_downscale(const GrayImage& source, int scale);

}  // namespace cdptwin
