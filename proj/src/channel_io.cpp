#include <string>

#include "cdptwin/channel.hpp"
#include "cdptwin/error.hpp"
#include "cdptwin/fileio.hpp"
#include "json.hpp"

namespace cdptwin::channel {

using ordered_json = nlohmann::ordered_json;

namespace {

constexpr std::string_view kPatternOrder = "row-major, top-left bit most significant";

}  // namespace

std::string to_json(const ChannelModel& model) {
  ordered_json doc;
  doc["direction"] = to_string(model.direction());
  doc["scale"] = model.scale();
  doc["sampling_law"] = "gaussian-clipped";
  doc["source"] = model.source() == ModelSource::fitted ? "fitted" : "reference";
  doc["fit_target"] = to_string(model.fit_target());
  doc["pattern_order"] = kPatternOrder;
  doc["std_convention"] = "population";
  doc["global"] = ordered_json{{"mean", model.global().mean}, {"std", model.global().std}};
  ordered_json table = ordered_json::array();
  for (int p = 0; p < kPatternCount; ++p) {
    const auto& e = model.table()[PatternId(p)];
    table.push_back(ordered_json{{"pattern", p}, {"count", e.count}, {"mean", e.mean}, {"std", e.std}, {"flip_prob", e.flip_prob}});
  }
  doc["table"] = std::move(table);
  return doc.dump(2) + "\n";
}

ChannelModel channel_from_json(std::string_view text) {
  try {
    const auto doc = ordered_json::parse(text);
    if (doc.at("sampling_law").get<std::string>() != "gaussian-clipped") {
      throw ParameterError("unsupported sampling law " + doc.at("sampling_law").get<std::string>());
    }
    if (doc.contains("pattern_order") && doc.at("pattern_order").get<std::string>() != kPatternOrder) {
      throw ParameterError("unsupported pattern order " + doc.at("pattern_order").get<std::string>());
    }
    const auto& rows = doc.at("table");
    if (!rows.is_array() || rows.size() != kPatternCount) {
      throw ParameterError("channel model table must have exactly 512 entries");
    }
    PatternTable table;
    for (const auto& row : rows) {
      const PatternId id(row.at("pattern").get<int>());
      auto& e = table[id];
      e.count = row.at("count").get<std::size_t>();
      e.mean = row.at("mean").get<double>();
      e.std = row.at("std").get<double>();
      e.flip_prob = row.at("flip_prob").get<double>();
    }
    const GlobalStats global{doc.at("global").at("mean").get<double>(), doc.at("global").at("std").get<double>()};
    const std::string source = doc.value("source", "fitted");
    return ChannelModel(parse_direction(doc.at("direction").get<std::string>()), doc.at("scale").get<int>(), table,
                        global, parse_fit_target(doc.value("fit_target", "center")),
                        source == "reference" ? ModelSource::reference : ModelSource::fitted);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("invalid channel model JSON: ") + e.what(), 0);
  }
}

void save_model(const std::filesystem::path& path, const ChannelModel& model) {
  write_file_atomic(path, to_json(model));
}

ChannelModel load_model(const std::filesystem::path& path) { return channel_from_json(read_file_text(path)); }

}  // namespace cdptwin::channel
