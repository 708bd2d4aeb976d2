#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "spot/pipeline/episode.hpp"

namespace spot::dataset {

using pipeline::Box;

struct EpisodeKey {
  std::string scene;
  std::string task;
  std::string episode;
  std::string str() const { return scene + "/" + task + "/" + episode; }
  friend bool operator==(const EpisodeKey&, const EpisodeKey&) = default;
  friend auto operator<=>(const EpisodeKey&, const EpisodeKey&) = default;
};

// Accepts "scene/task/episode", backslashes, repeated or trailing separators,
// and the processed-layout form "scene/task/recording_output_processed/episode".
// Throws ParseError otherwise.
EpisodeKey parse_key(const std::string& key);

struct Annotation {
  std::string key;  // normalized
  Box object;
  Box target;
};

struct AnnotationIssue {
  std::string key;
  std::string reason;
};

struct AnnotationSet {
  std::map<std::string, Annotation> records;
  std::vector<AnnotationIssue> skipped;
};

// Image extents per normalized key, or nullopt when unknown (bounds check skipped).
using ExtentLookup = std::function<std::optional<std::pair<int, int>>(const EpisodeKey&)>;

// Malformed JSON throws ParseError; per-entry problems are itemized in `skipped`.
AnnotationSet parse_annotations(const std::string& json_text, const ExtentLookup& extents = {});
AnnotationSet load_annotations(const std::filesystem::path& path, const ExtentLookup& extents = {});

// Inserts or replaces one entry, keeping the order and content of all others.
// Output is the canonical two-space-indented form.
std::string upsert_annotation(const std::string& json_text, const std::string& key, const Box& object,
                              const Box& target);

std::string annotations_to_json(const std::vector<Annotation>& records);

}  // namespace spot::dataset
