#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "cdptwin/imaging.hpp"

namespace cdptwin {

/// Binary (P5) PGM with maxval 255 (8-bit) or 65535 (16-bit, big-endian).
/// Pixels are mapped linearly: value = sample / maxval.
struct PgmImage {
  GrayImage image;
  int bit_depth = 8;
};

PgmImage parse_pgm(std::span<const std::byte> bytes);
PgmImage read_pgm(const std::filesystem::path& path);

std::vector<std::byte> encode_pgm(const GrayImage& image, int bit_depth);
void write_pgm(const std::filesystem::path& path, const GrayImage& image, int bit_depth);
/// Binary templates are written as 8-bit {0, 255}.
void write_pgm(const std::filesystem::path& path, const BinaryTemplate& bits);

}  // namespace cdptwin
