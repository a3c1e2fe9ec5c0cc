#include "cdptwin/cli/dataset.hpp"

#include <algorithm>
#include <charconv>

#include "cdptwin/error.hpp"
#include "cdptwin/pgm.hpp"

namespace cdptwin::cli {

namespace fs = std::filesystem;

std::map<std::string, DatasetItem> scan_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::map<std::string, DatasetItem> items;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".pgm") continue;
    const std::string stem = entry.path().stem().string();
    std::string id = stem;
    int realization = 0;
    const auto marker = stem.rfind("_r");
    if (marker != std::string::npos && marker + 2 < stem.size()) {
      const char* first = stem.data() + marker + 2;
      const char* last = stem.data() + stem.size();
      int n = 0;
      auto [ptr, ec] = std::from_chars(first, last, n);
      if (ec == std::errc{} && ptr == last && n >= 1) {
        id = stem.substr(0, marker);
        realization = n;
      }
    }
    auto& item = items[id];
    item.id = id;
    item.files.emplace_back(realization, entry.path());
  }
  for (auto& [id, item] : items) std::sort(item.files.begin(), item.files.end());
  return items;
}

std::string realization_name(const std::string& id, std::size_t n) { return id + "_r" + std::to_string(n) + ".pgm"; }

BinaryTemplate read_template(const fs::path& path) {
  const auto pgm = read_pgm(path);
  try {
    return BinaryTemplate::from_gray(pgm.image);
  } catch (const ParameterError&) {
    throw FormatError("template " + path.string() + " is not binary (expected only 0 and maxval)", 0);
  }
}

RealizationStack read_stack(const DatasetItem& item) {
  std::vector<GrayImage> images;
  images.reserve(item.files.size());
  for (const auto& [n, path] : item.files) images.push_back(read_pgm(path).image);
  return RealizationStack(std::move(images));
}

GrayImage match_geometry(const GrayImage& image, int width, int height) {
  if (image.width() == width && image.height() == height) return image;
  if (width > image.width() && width % image.width() == 0 && height % image.height() == 0 &&
      width / image.width() == height / image.height()) {
    return upscale(image, width / image.width());
  }
  if (width < image.width() && image.width() % width == 0 && image.height() % height == 0 &&
      image.width() / width == image.height() / height) {
    return block_mean_downscale(image, image.width() / width);
  }
  throw ParameterError("cannot resample " + std::to_string(image.width()) + "x" + std::to_string(image.height()) +
                       " to " + std::to_string(width) + "x" + std::to_string(height));
}

}  // namespace cdptwin::cli
