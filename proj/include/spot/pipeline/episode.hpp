#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "spot/common/raster.hpp"
#include "spot/geometry/pose.hpp"

namespace spot::pipeline {

// Pixel box in original first-frame coordinates.
struct Box {
  double x_min = 0, y_min = 0, x_max = 0, y_max = 0;

  bool well_formed() const { return x_min < x_max && y_min < y_max; }
  bool inside(int width, int height) const {
    return x_min >= 0 && y_min >= 0 && x_max <= width && y_max <= height;
  }
  friend bool operator==(const Box&, const Box&) = default;
};

// Frames addressed by raw frame index: either held in memory or read lazily
// from a directory of frame_<index>.ppm files.
class FrameStore {
 public:
  FrameStore() = default;
  explicit FrameStore(std::filesystem::path directory) : directory_(std::move(directory)) {}

  void put(std::int64_t index, Raster frame) { frames_[index] = std::move(frame); }
  bool has(std::int64_t index) const;
  Raster get(std::int64_t index) const;

  const std::filesystem::path& directory() const { return directory_; }
  static std::string file_name(std::int64_t index);

 private:
  std::filesystem::path directory_;
  std::map<std::int64_t, Raster> frames_;
};

struct EpisodeRecord {
  std::string scene;
  std::string task;
  std::string episode;
  std::vector<std::int64_t> valid_indices;
  std::vector<geometry::Pose> pose_interp;  // EE pose per valid frame
  std::vector<double> gripper_widths;       // meters, per valid frame
  FrameStore frames;
  std::optional<Box> prompt_object;
  std::optional<Box> prompt_target;
  int image_width = 0;
  int image_height = 0;

  std::string key() const { return scene + "/" + task + "/" + episode; }
};

// <root>/<scene>/<task>/recording_output_processed/<episode>/
std::filesystem::path processed_dir(const std::filesystem::path& root, const std::string& scene,
                                    const std::string& task, const std::string& episode);

// Throws PipelineError for empty or misaligned arrays, or an existing
// non-empty target directory without `overwrite`.
void write_processed(const std::filesystem::path& root, const EpisodeRecord& record, bool overwrite);
// Reads one processed directory. Identity comes from the path; boxes are left empty.
EpisodeRecord read_processed(const std::filesystem::path& episode_dir);

// All processed episode directories under `root`, sorted by key.
std::vector<std::filesystem::path> find_processed_episodes(const std::filesystem::path& root);

struct ValidationReport {
  bool ok = true;
  std::vector<std::string> reasons;

  void fail(std::string reason) {
    ok = false;
    reasons.push_back(std::move(reason));
  }
};

ValidationReport validate_episode(const EpisodeRecord& record, int history, int horizon);

}  // namespace spot::pipeline
