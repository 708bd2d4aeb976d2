#include "spot/dataset/annotations.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "spot/common/array_io.hpp"
#include "spot/common/error.hpp"

namespace spot::dataset {

using ordered_json = nlohmann::ordered_json;

EpisodeKey parse_key(const std::string& key) {
  std::string s = key;
  std::replace(s.begin(), s.end(), '\\', '/');
  std::vector<std::string> parts;
  std::stringstream in(s);
  std::string part;
  while (std::getline(in, part, '/')) {
    if (!part.empty() && part != ".") parts.push_back(part);
  }
  if (parts.size() == 4 && parts[2] == "recording_output_processed") parts.erase(parts.begin() + 2);
  if (parts.size() != 3) throw ParseError("unparseable episode key '" + key + "'");
  return {parts[0], parts[1], parts[2]};
}

namespace {

std::optional<Box> box_from_json(const ordered_json& j, std::string& why) {
  if (!j.is_array() || j.size() != 4) {
    why = "box must be an array of 4 numbers";
    return std::nullopt;
  }
  double c[4];
  for (int i = 0; i < 4; ++i) {
    if (!j[i].is_number()) {
      why = "box coordinate is not a number";
      return std::nullopt;
    }
    c[i] = j[i].get<double>();
    if (!std::isfinite(c[i])) {
      why = "box coordinate is not finite";
      return std::nullopt;
    }
  }
  return Box{c[0], c[1], c[2], c[3]};
}

ordered_json box_to_json(const Box& b) {
  auto num = [](double v) -> ordered_json {
    if (v == std::floor(v) && std::abs(v) < 9e15) return static_cast<std::int64_t>(v);
    return v;
  };
  return ordered_json::array({num(b.x_min), num(b.y_min), num(b.x_max), num(b.y_max)});
}

std::string check_box(const Box& b, const char* role, const std::optional<std::pair<int, int>>& size) {
  if (!b.well_formed()) return std::string(role) + " box is degenerate (need x_min < x_max, y_min < y_max)";
  if (b.x_min < 0 || b.y_min < 0) return std::string(role) + " box has negative coordinates";
  if (size && !b.inside(size->first, size->second)) {
    return std::string(role) + " box exceeds image extents " + std::to_string(size->first) + "x" +
           std::to_string(size->second);
  }
  return {};
}

}  // namespace

AnnotationSet parse_annotations(const std::string& json_text, const ExtentLookup& extents) {
  ordered_json root;
  try {
    root = ordered_json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed annotation JSON: ") + e.what());
  }
  if (!root.is_object()) throw ParseError("annotation JSON must be an object keyed by episode");
  AnnotationSet out;
  for (const auto& [raw_key, entry] : root.items()) {
    auto skip = [&](std::string reason) { out.skipped.push_back({raw_key, std::move(reason)}); };
    EpisodeKey key;
    try {
      key = parse_key(raw_key);
    } catch (const ParseError& e) {
      skip(e.what());
      continue;
    }
    if (!entry.is_object()) {
      skip("entry is not an object");
      continue;
    }
    std::optional<Box> object, target;
    std::string why;
    bool bad = false;
    if (entry.contains("boxes")) {
      const auto& boxes = entry["boxes"];
      if (!boxes.is_array()) {
        skip("boxes is not an array");
        continue;
      }
      if (boxes.size() >= 1) bad |= !(object = box_from_json(boxes[0], why));
      if (!bad && boxes.size() >= 2) bad |= !(target = box_from_json(boxes[1], why));
    }
    if (!bad && entry.contains("object")) bad |= !(object = box_from_json(entry["object"], why));
    if (!bad && entry.contains("target")) bad |= !(target = box_from_json(entry["target"], why));
    if (bad) {
      skip(why);
      continue;
    }
    if (!object || !target) {
      skip(!object && !target ? "missing object and target boxes" : !object ? "missing object box"
                                                                              : "missing target box");
      continue;
    }
    const auto size = extents ? extents(key) : std::nullopt;
    if (auto r = check_box(*object, "object", size); !r.empty()) {
      skip(r);
      continue;
    }
    if (auto r = check_box(*target, "target", size); !r.empty()) {
      skip(r);
      continue;
    }
    const auto norm = key.str();
    if (out.records.count(norm)) {
      skip("duplicate key after normalization");
      continue;
    }
    out.records[norm] = Annotation{norm, *object, *target};
  }
  return out;
}

AnnotationSet load_annotations(const std::filesystem::path& path, const ExtentLookup& extents) {
  return parse_annotations(read_file_bytes(path), extents);
}

std::string upsert_annotation(const std::string& json_text, const std::string& key, const Box& object,
                              const Box& target) {
  ordered_json root = ordered_json::object();
  if (!json_text.empty()) {
    try {
      root = ordered_json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("malformed annotation JSON: ") + e.what());
    }
    if (!root.is_object()) throw ParseError("annotation JSON must be an object keyed by episode");
  }
  ordered_json entry = root.contains(key) && root[key].is_object() ? root[key] : ordered_json::object();
  entry["boxes"] = ordered_json::array({box_to_json(object), box_to_json(target)});
  entry["object"] = box_to_json(object);
  entry["target"] = box_to_json(target);
  root[key] = entry;
  return root.dump(2) + "\n";
}

std::string annotations_to_json(const std::vector<Annotation>& records) {
  std::string text;
  for (const auto& a : records) text = upsert_annotation(text, a.key, a.object, a.target);
  return text.empty() ? "{}\n" : text;
}

}  // namespace spot::dataset
