#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "spot/common/raster.hpp"
#include "spot/geometry/pose.hpp"
#include "spot/pipeline/episode.hpp"

namespace spot::dataset {

using pipeline::Box;

enum class PromptVariant { kNone, kPoint, kBbox, kVisionBbox, kVisionBboxAndBbox };

// "none", "point", "bbox", "vision_bbox", "vision_bbox_and_bbox". Throws ConfigError.
PromptVariant parse_variant(const std::string& name);
std::string variant_name(PromptVariant v);
inline bool uses_box_coords(PromptVariant v) {
  return v == PromptVariant::kBbox || v == PromptVariant::kVisionBboxAndBbox;
}
inline bool uses_point_coords(PromptVariant v) { return v == PromptVariant::kPoint; }
inline bool uses_rendered_frame(PromptVariant v) {
  return v == PromptVariant::kVisionBbox || v == PromptVariant::kVisionBboxAndBbox;
}

inline constexpr Rgb kObjectOutline{255, 0, 0};
inline constexpr Rgb kTargetOutline{0, 255, 0};
inline constexpr int kOutlineThickness = 2;

// Coordinates normalized by image width/height into [0,1].
struct PromptPayload {
  PromptVariant variant = PromptVariant::kNone;
  std::optional<std::array<double, 4>> object_box;
  std::optional<std::array<double, 4>> target_box;
  std::optional<std::array<double, 2>> object_point;
  std::optional<std::array<double, 2>> target_point;
  std::shared_ptr<const Raster> rendered_frame;  // first frame with outlines, vision variants only
};

Raster render_prompt_boxes(const Raster& frame, const Box& object, const Box& target);

// `first_frame` is needed only by the vision variants.
PromptPayload prompt_payload(PromptVariant variant, const Box& object, const Box& target, int width, int height,
                             const std::shared_ptr<const Raster>& first_frame = nullptr);

struct SampleConfig {
  int history = 4;   // K
  int horizon = 16;  // H
  int stride = 3;
  bool load_frames = true;
};

struct Sample {
  std::string scene;
  std::string task;
  std::string episode;
  int timestep = 0;  // index into the subsampled sequence
  std::int64_t frame_index = 0;
  int image_width = 0;
  int image_height = 0;
  geometry::Pose anchor;  // world EE pose at `timestep`
  std::shared_ptr<const Raster> first_frame;
  std::shared_ptr<const Raster> current_frame;
  std::optional<Box> object_box;  // original pixels
  std::optional<Box> target_box;
  std::vector<double> action_history;  // K x 10
  std::vector<double> future_actions;  // H x 10
  bool is_final_chunk = false;

  std::string key() const { return scene + "/" + task + "/" + episode; }
};

// Positions into valid_indices kept by stride subsampling, starting at 0.
std::vector<std::size_t> subsample_positions(std::size_t valid_count, int stride);

struct SubsampledTrack {
  std::vector<std::int64_t> frame_indices;
  std::vector<geometry::Pose> poses;
  std::vector<double> widths;
};
SubsampledTrack subsample(const pipeline::EpisodeRecord& record, int stride);

inline int sample_count(int subsampled_steps, int history, int horizon) {
  return std::max(0, subsampled_steps - history - horizon);
}

// Relative-pose sliding windows. Timesteps without K prior steps or H future
// steps are skipped; a too-short episode yields an empty list.
std::vector<Sample> build_samples(const pipeline::EpisodeRecord& record, const SampleConfig& config);

// Future chunk of a sample as waypoints.
geometry::Chunk future_chunk(const Sample& s);

}  // namespace spot::dataset
