#include "cdptwin/pgm.hpp"

#include <cctype>
#include <cmath>
#include <string>

#include "cdptwin/error.hpp"
#include "cdptwin/fileio.hpp"

namespace cdptwin {
namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::byte> bytes) : bytes_(bytes) {}

  std::size_t offset() const { return pos_; }

  int peek() const { return pos_ < bytes_.size() ? static_cast<int>(bytes_[pos_]) : -1; }

  void expect_magic() {
    if (bytes_.size() < 2 || bytes_[0] != std::byte{'P'} || bytes_[1] != std::byte{'5'}) {
      throw FormatError("missing P5 magic number", 0);
    }
    pos_ = 2;
  }

  void skip_whitespace_and_comments() {
    for (;;) {
      const int c = peek();
      if (c == '#') {
        while (peek() != -1 && peek() != '\n') ++pos_;
      } else if (c != -1 && std::isspace(c)) {
        ++pos_;
      } else {
        return;
      }
    }
  }

  long read_number(const char* field) {
    const std::size_t start = pos_;
    skip_whitespace_and_comments();
    if (pos_ == start) throw FormatError(std::string("expected whitespace before ") + field, pos_);
    if (peek() == -1 || !std::isdigit(peek())) {
      throw FormatError(std::string("expected decimal ") + field, pos_);
    }
    long value = 0;
    while (peek() != -1 && std::isdigit(peek())) {
      value = value * 10 + (peek() - '0');
      if (value > 1'000'000'000L) throw FormatError(std::string(field) + " is too large", pos_);
      ++pos_;
    }
    return value;
  }

  /// Exactly one whitespace byte separates maxval from the raster.
  void expect_single_whitespace() {
    if (peek() == -1 || !std::isspace(peek())) {
      throw FormatError("expected a single whitespace byte after maxval", pos_);
    }
    ++pos_;
  }

 private:
  std::span<const std::byte> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

PgmImage parse_pgm(std::span<const std::byte> bytes) {
  HeaderReader reader(bytes);
  reader.expect_magic();
  const long width = reader.read_number("width");
  const long height = reader.read_number("height");
  const std::size_t maxval_offset = reader.offset();
  const long maxval = reader.read_number("maxval");
  if (width <= 0 || height <= 0) throw FormatError("image dimensions must be positive", maxval_offset);
  if (maxval != 255 && maxval != 65535) {
    throw FormatError("unsupported maxval " + std::to_string(maxval) + " (expected 255 or 65535)",
                      maxval_offset);
  }
  reader.expect_single_whitespace();

  const std::size_t data_start = reader.offset();
  const std::size_t sample_bytes = maxval == 255 ? 1 : 2;
  const std::size_t pixel_count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  const std::size_t needed = pixel_count * sample_bytes;
  if (bytes.size() - data_start < needed) {
    throw FormatError("truncated raster: expected " + std::to_string(needed) + " bytes, found " +
                          std::to_string(bytes.size() - data_start),
                      bytes.size());
  }

  Field pixels(static_cast<int>(width), static_cast<int>(height));
  auto out = pixels.values();
  const double scale = 1.0 / static_cast<double>(maxval);
  for (std::size_t i = 0; i < pixel_count; ++i) {
    unsigned sample = 0;
    if (sample_bytes == 1) {
      sample = static_cast<unsigned>(bytes[data_start + i]);
    } else {
      sample = (static_cast<unsigned>(bytes[data_start + 2 * i]) << 8) |
               static_cast<unsigned>(bytes[data_start + 2 * i + 1]);
    }
    out[i] = sample * scale;
  }
  return PgmImage{GrayImage(std::move(pixels)), maxval == 255 ? 8 : 16};
}

PgmImage read_pgm(const std::filesystem::path& path) { return parse_pgm(read_file_bytes(path)); }

std::vector<std::byte> encode_pgm(const GrayImage& image, int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16) {
    throw ParameterError("PGM bit depth must be 8 or 16, got " + std::to_string(bit_depth));
  }
  const unsigned maxval = bit_depth == 8 ? 255U : 65535U;
  const std::string header =
      "P5\n" + std::to_string(image.width()) + " " + std::to_string(image.height()) + "\n" + std::to_string(maxval) + "\n";

  std::vector<std::byte> out;
  out.reserve(header.size() + image.size() * (bit_depth / 8));
  for (char c : header) out.push_back(static_cast<std::byte>(c));
  for (double v : image.pixels()) {
    const auto sample = static_cast<unsigned>(std::lround(v * maxval));
    if (bit_depth == 16) out.push_back(static_cast<std::byte>(sample >> 8));
    out.push_back(static_cast<std::byte>(sample & 0xFFU));
  }
  return out;
}

void write_pgm(const std::filesystem::path& path, const GrayImage& image, int bit_depth) {
  write_file_atomic(path, encode_pgm(image, bit_depth));
}

void write_pgm(const std::filesystem::path& path, const BinaryTemplate& bits) {
  write_pgm(path, bits.to_gray(), 8);
}

}  // namespace cdptwin
