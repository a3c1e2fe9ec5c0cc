#include "cdptwin/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "cdptwin/error.hpp"
#include "cdptwin/rng.hpp"

namespace cdptwin {
namespace {

void check_dimensions(int width, int height, const char* what) {
  if (width <= 0 || height <= 0) {
    throw ParameterError(std::string(what) + ": dimensions must be positive, got " +
                         std::to_string(width) + "x" + std::to_string(height));
  }
}

void check_scale(int scale) {
  if (scale < 1) throw ParameterError("scale must be >= 1, got " + std::to_string(scale));
}

}  // namespace

GrayImage::GrayImage(Field pixels) : pixels_(std::move(pixels)) {
  check_dimensions(pixels_.width(), pixels_.height(), "GrayImage");
  for (double v : pixels_.values()) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw ParameterError("GrayImage pixel outside [0,1]: " + std::to_string(v));
    }
  }
}

GrayImage::GrayImage(int width, int height, double fill) : GrayImage(Field(width, height, fill)) {}

GrayImage GrayImage::clamped(Field pixels) {
  for (double& v : pixels.values()) {
    if (std::isnan(v)) throw ParameterError("cannot clamp NaN pixel");
    v = std::clamp(v, 0.0, 1.0);
  }
  return GrayImage(std::move(pixels));
}

BinaryTemplate::BinaryTemplate(Grid<std::uint8_t> bits) : bits_(std::move(bits)) {
  check_dimensions(bits_.width(), bits_.height(), "BinaryTemplate");
  for (std::uint8_t b : bits_.values()) {
    if (b > 1) throw ParameterError("BinaryTemplate bit must be 0 or 1, got " + std::to_string(b));
  }
}

BinaryTemplate BinaryTemplate::from_gray(const GrayImage& image) {
  Grid<std::uint8_t> bits(image.width(), image.height());
  auto out = bits.values();
  auto in = image.pixels();
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (in[i] == 0.0) {
      out[i] = 0;
    } else if (in[i] == 1.0) {
      out[i] = 1;
    } else {
      throw ParameterError("image is not binary: pixel value " + std::to_string(in[i]));
    }
  }
  return BinaryTemplate(std::move(bits));
}

GrayImage BinaryTemplate::to_gray() const {
  Field out(width(), height());
  std::transform(bits().begin(), bits().end(), out.values().begin(),
                 [](std::uint8_t b) { return static_cast<double>(b); });
  return GrayImage(std::move(out));
}

BinaryTemplate BinaryTemplate::complement() const {
  Grid<std::uint8_t> out(width(), height());
  std::transform(bits().begin(), bits().end(), out.values().begin(),
                 [](std::uint8_t b) { return static_cast<std::uint8_t>(1 - b); });
  return BinaryTemplate(std::move(out));
}

RealizationStack::RealizationStack(std::vector<GrayImage> images) : images_(std::move(images)) {
  if (images_.empty()) throw ParameterError("RealizationStack needs at least one image");
  for (const auto& img : images_) {
    if (!img.same_shape(images_.front())) {
      throw ParameterError("RealizationStack images must share dimensions");
    }
  }
}

RealizationStack RealizationStack::prefix(std::size_t count) const {
  if (count == 0 || count > k()) {
    throw ParameterError("prefix of " + std::to_string(count) + " from a stack of " + std::to_string(k()));
  }
  return RealizationStack(std::vector<GrayImage>(images_.begin(), images_.begin() + static_cast<std::ptrdiff_t>(count)));
}

BinaryTemplate generate_template(int width, int height, double density, std::uint64_t seed) {
  check_dimensions(width, height, "generate_template");
  if (!(density > 0.0 && density < 1.0)) {
    throw ParameterError("template density must lie in (0,1), got " + std::to_string(density));
  }
  Rng rng(seed, "template", 0);
  Grid<std::uint8_t> bits(width, height);
  for (auto& b : bits.values()) b = rng.uniform() < density ? 1 : 0;
  return BinaryTemplate(std::move(bits));
}

namespace {

template <typename T>
Grid<T> replicate(const Grid<T>& source, int scale) {
  Grid<T> out(source.width() * scale, source.height() * scale);
  for (int r = 0; r < out.height(); ++r) {
    for (int c = 0; c < out.width(); ++c) out.at(r, c) = source.at(r / scale, c / scale);
  }
  return out;
}

}  // namespace

BinaryTemplate upscale(const BinaryTemplate& source, int scale) {
  check_scale(scale);
  Grid<std::uint8_t> bits(source.width(), source.height(),
                          std::vector<std::uint8_t>(source.bits().begin(), source.bits().end()));
  return BinaryTemplate(replicate(bits, scale));
}

GrayImage upscale(const GrayImage& source, int scale) {
  check_scale(scale);
  return GrayImage(replicate(source.field(), scale));
}

GrayImage block_mean_downscale(const GrayImage& source, int scale) {
  check_scale(scale);
  if (source.width() % scale != 0 || source.height() % scale != 0) {
    throw ParameterError("block_mean_downscale: " + std::to_string(source.width()) + "x" +
                         std::to_string(source.height()) + " is not divisible by " + std::to_string(scale));
  }
  if (scale == 1) return source;
  Field out(source.width() / scale, source.height() / scale);
  const double area = static_cast<double>(scale) * scale;
  for (int r = 0; r < out.height(); ++r) {
    for (int c = 0; c < out.width(); ++c) {
      double sum = 0.0;
      for (int dr = 0; dr < scale; ++dr) {
        for (int dc = 0; dc < scale; ++dc) sum += source.at(r * scale + dr, c * scale + dc);
      }
      out.at(r, c) = sum / area;
    }
  }
  // Rounding of the mean can overshoot 1 by an ulp.
  return GrayImage::clamped(std::move(out));
}

}  // namespace cdptwin
