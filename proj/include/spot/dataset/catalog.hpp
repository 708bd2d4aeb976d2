#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "spot/dataset/annotations.hpp"
#include "spot/dataset/samples.hpp"
#include "spot/dataset/split.hpp"
#include "spot/pipeline/episode.hpp"

namespace spot::dataset {

inline constexpr const char* kAnnotationFile = "annotations_merged.json";

// Annotated processed episodes that pass validation, sorted by key.
struct Catalog {
  std::filesystem::path root;
  std::vector<pipeline::EpisodeRecord> episodes;
  std::vector<AnnotationIssue> skipped;

  const pipeline::EpisodeRecord* find(const std::string& key) const;
  std::vector<EpisodeRef> refs() const;
};

// Skips (with reasons) annotations without a processed directory, processed
// directories without annotations, and episodes failing validate_episode.
Catalog load_catalog(const std::filesystem::path& root, const std::filesystem::path& annotations,
                     const SampleConfig& config);

// Samples for the episodes of one split, in manifest order.
std::vector<Sample> samples_for(const Catalog& catalog, const std::vector<EpisodeRef>& split,
                                const SampleConfig& config);

}  // namespace spot::dataset
