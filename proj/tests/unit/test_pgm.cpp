#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <string>

#include "cdptwin/error.hpp"
#include "cdptwin/fileio.hpp"
#include "cdptwin/pgm.hpp"
#include "oracles.hpp"

using namespace cdptwin;

namespace {

std::vector<std::byte> bytes_of(const std::string& s) {
  std::vector<std::byte> out(s.size());
  std::memcpy(out.data(), s.data(), s.size());
  return out;
}

std::size_t offset_of(const std::string& text) {
  try {
    parse_pgm(bytes_of(text));
  } catch (const FormatError& e) {
    return e.offset();
  }
  ADD_FAILURE() << "no FormatError";
  return 0;
}

}  // namespace

TEST(Pgm, ParsesHandBuiltFile) {
  const std::string file = std::string("P5 2 2 255\n") + '\x00' + '\xff' + '\x80' + '\x01';
  const auto pgm = parse_pgm(bytes_of(file));
  ASSERT_EQ(pgm.image.width(), 2);
  ASSERT_EQ(pgm.image.height(), 2);
  EXPECT_EQ(pgm.bit_depth, 8);
  EXPECT_DOUBLE_EQ(pgm.image.at(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(pgm.image.at(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(pgm.image.at(1, 0), 128.0 / 255.0);
  EXPECT_DOUBLE_EQ(pgm.image.at(1, 1), 1.0 / 255.0);
}

TEST(Pgm, SixteenBitIsBigEndian) {
  const std::string file = std::string("P5\n1 1\n65535\n") + '\x01' + '\x02';
  EXPECT_DOUBLE_EQ(parse_pgm(bytes_of(file)).image.at(0, 0), 258.0 / 65535.0);
}

TEST(Pgm, SkipsComments) {
  const std::string file = std::string("P5\n# a comment\n1 1\n255\n") + '\xff';
  EXPECT_DOUBLE_EQ(parse_pgm(bytes_of(file)).image.at(0, 0), 1.0);
}

TEST(Pgm, FormatErrorsCarryOffsets) {
  EXPECT_EQ(offset_of("P6 1 1 255\nx"), 0u);
  EXPECT_GT(offset_of("P5 1 1 1000\nxx"), 0u);
  EXPECT_THROW(parse_pgm(bytes_of("P5 2 2 255\nabc")), FormatError);
  EXPECT_THROW(parse_pgm(bytes_of("P5 2")), FormatError);
  EXPECT_EQ(offset_of("P5 2 2 255\nabc"), 14u);
}

TEST(Pgm, RoundTripWithinQuantization) {
  for (int depth : {8, 16}) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto img = oracle::random_image(13, 7, seed);
      const auto back = parse_pgm(encode_pgm(img, depth)).image;
      const double step = depth == 8 ? 1.0 / 255 : 1.0 / 65535;
      for (std::size_t i = 0; i < img.size(); ++i) ASSERT_LE(std::abs(back.pixels()[i] - img.pixels()[i]), step);
    }
  }
}

TEST(Pgm, TemplatesUseZeroAnd255) {
  const auto dir = std::filesystem::temp_directory_path() / "cdptwin_pgm_test";
  std::filesystem::create_directories(dir);
  const auto z = generate_template(8, 8, 0.5, 1);
  write_pgm(dir / "z.pgm", z);
  const auto raw = read_file_bytes(dir / "z.pgm");
  const std::string header = "P5\n8 8\n255\n";
  ASSERT_EQ(raw.size(), header.size() + 64);
  for (std::size_t i = header.size(); i < raw.size(); ++i) {
    const auto b = std::to_integer<int>(raw[i]);
    EXPECT_TRUE(b == 0 || b == 255);
  }
  EXPECT_EQ(BinaryTemplate::from_gray(read_pgm(dir / "z.pgm").image), z);
  std::filesystem::remove_all(dir);
}

TEST(Pgm, RejectsBadBitDepthAndMissingFile) {
  EXPECT_THROW(encode_pgm(GrayImage(1, 1, 0.0), 12), ParameterError);
  EXPECT_THROW(read_pgm("/nonexistent/none.pgm"), IoError);
}
