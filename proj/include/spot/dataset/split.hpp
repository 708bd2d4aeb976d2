#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace spot::dataset {

struct EpisodeRef {
  std::string key;
  std::string scene;
  std::string task;
  std::string path;
  friend bool operator==(const EpisodeRef&, const EpisodeRef&) = default;
};

struct SplitManifest {
  std::uint64_t seed = 0;
  double val_ratio = 0.1;
  std::vector<EpisodeRef> train;
  std::vector<EpisodeRef> val;

  std::string to_json() const;
  static SplitManifest from_json(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static SplitManifest load(const std::filesystem::path& path);
  friend bool operator==(const SplitManifest&, const SplitManifest&) = default;
};

// Per scene, task names are sorted then shuffled with a (seed, scene) stream;
// whole tasks move to validation until the scene's validation episode share
// first reaches val_ratio. Throws ConfigError for val_ratio outside (0,1) and
// InternalError if any key lands in both splits.
SplitManifest make_split(std::vector<EpisodeRef> episodes, double val_ratio, std::uint64_t seed);

// Throws InternalError on key overlap or a task present in both splits.
void verify_split(const SplitManifest& manifest);

// Half the L1 distance between per-scene episode-share distributions.
double split_tv_distance(const SplitManifest& manifest);

}  // namespace spot::dataset
