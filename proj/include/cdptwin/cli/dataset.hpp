#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cdptwin/imaging.hpp"

namespace cdptwin::cli {

/// Files of one item in a directory: `<id>.pgm` (realization 0) and
/// `<id>_r<n>.pgm` (realization n), sorted by realization number.
struct DatasetItem {
  std::string id;
  std::vector<std::pair<int, std::filesystem::path>> files;
};

/// All items of a directory keyed and ordered by id. Non-PGM files are ignored.
/// Throws IoError when the directory does not exist.
std::map<std::string, DatasetItem> scan_dataset(const std::filesystem::path& dir);

/// `<id>_r<n>.pgm`
std::string realization_name(const std::string& id, std::size_t n);

BinaryTemplate read_template(const std::filesystem::path& path);
RealizationStack read_stack(const DatasetItem& item);

/// Resamples `image` to `width` x `height` when the two differ by an integer
/// factor: replication when enlarging, block mean when shrinking.
GrayImage match_geometry(const GrayImage& image, int width, int height);

}  // namespace cdptwin::cli
