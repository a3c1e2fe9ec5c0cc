#include <string>

#include "cdptwin/ddpm.hpp"
#include "cdptwin/error.hpp"
#include "cdptwin/fileio.hpp"
#include "json.hpp"

namespace cdptwin::ddpm {

using ordered_json = nlohmann::ordered_json;

std::string to_json(const LinearDenoiser& denoiser) {
  ordered_json doc;
  doc["kind"] = "linear";
  doc["patch_radius"] = denoiser.patch_radius();
  doc["buckets"] = denoiser.buckets().size();
  doc["features"] = "noisy patch then condition patch, row-major, edge-replicated";
  doc["regularized"] = denoiser.regularized();
  ordered_json coefficients = ordered_json::array();
  for (std::size_t b = 0; b < denoiser.buckets().size(); ++b) {
    const auto& bucket = denoiser.buckets()[b];
    coefficients.push_back(ordered_json{{"bucket", b},
                                        {"alpha_bar_floor", bucket.alpha_bar_floor},
                                        {"rows", bucket.rows},
                                        {"A", bucket.weights},
                                        {"c", bucket.bias}});
  }
  doc["coefficients"] = std::move(coefficients);
  return doc.dump(2) + "\n";
}

LinearDenoiser linear_denoiser_from_json(std::string_view text) {
  try {
    const auto doc = ordered_json::parse(text);
    if (doc.at("kind").get<std::string>() != "linear") throw ParameterError("unsupported denoiser kind");
    std::vector<LinearDenoiser::Bucket> buckets;
    for (const auto& row : doc.at("coefficients")) {
      LinearDenoiser::Bucket b;
      b.alpha_bar_floor = row.at("alpha_bar_floor").get<double>();
      b.rows = row.at("rows").get<std::size_t>();
      b.weights = row.at("A").get<std::vector<double>>();
      b.bias = row.at("c").get<double>();
      buckets.push_back(std::move(b));
    }
    if (buckets.size() != doc.at("buckets").get<std::size_t>()) {
      throw ParameterError("denoiser bucket count does not match its coefficient list");
    }
    return LinearDenoiser(doc.at("patch_radius").get<int>(), std::move(buckets), doc.at("regularized").get<bool>());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("invalid denoiser JSON: ") + e.what(), 0);
  }
}

void save_denoiser(const std::filesystem::path& path, const LinearDenoiser& denoiser) {
  write_file_atomic(path, to_json(denoiser));
}

LinearDenoiser load_denoiser(const std::filesystem::path& path) {
  return linear_denoiser_from_json(read_file_text(path));
}

}  // namespace cdptwin::ddpm
