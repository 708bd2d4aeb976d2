#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "spot/geometry/pose.hpp"
#include "spot/pipeline/episode.hpp"

namespace spot::pipeline {

struct TimedPose {
  double time = 0.0;
  geometry::Pose pose;
};

struct TagDetection {
  double time = 0.0;
  Eigen::Vector2d left = Eigen::Vector2d::Zero();
  Eigen::Vector2d right = Eigen::Vector2d::Zero();

  double distance() const { return (left - right).norm(); }
};

// Maps inter-tag pixel distance onto gripper width.
struct GripperRange {
  double tag_dist_min = 0.0;
  double tag_dist_max = 1.0;
  double width_min = 0.0;
  double width_max = 0.08;
};

struct Calibration {
  double camera_latency = 0.0;    // seconds subtracted from camera receive times
  double tracking_latency = 0.0;  // seconds subtracted from tracking receive times
  geometry::Pose camera_to_ee;
  GripperRange gripper;
};

// Receive-time streams as recorded; tracking poses are camera poses.
struct RawEpisode {
  std::string scene;
  std::string task;
  std::string episode;
  std::vector<double> frame_times;
  std::vector<TimedPose> tracking;
  std::vector<TagDetection> detections;  // stamped with camera receive times
  Calibration calibration;
  FrameStore frames;
};

struct SyncResult {
  std::vector<std::int64_t> valid_indices;
  std::vector<double> corrected_times;  // one per valid frame
  double overlap_begin = 0.0;
  double overlap_end = 0.0;
};

// Latency-corrects both streams and keeps frames inside the closed overlap.
SyncResult synchronize(const RawEpisode& raw);

// Lerp translation, slerp rotation between bracketing samples. No extrapolation.
std::vector<geometry::Pose> interpolate_poses(std::span<const TimedPose> track, std::span<const double> query_times);

inline geometry::Pose camera_to_ee(const geometry::Pose& camera_pose, const geometry::Pose& extrinsic) {
  return camera_pose * extrinsic;
}

double width_from_tag_distance(double distance, const GripperRange& range);

// Per-detection widths, linearly interpolated onto `query_times`; queries
// outside the detection span hold the nearest endpoint value.
std::vector<double> gripper_widths(std::span<const TagDetection> detections, const GripperRange& range,
                                   std::span<const double> query_times);

// Full raw -> processed conversion (frames are referenced, not copied).
EpisodeRecord process_episode(const RawEpisode& raw);

// Raw recording directory: frame_times.arr, tracking_times.arr, tracking_poses.arr (Mx4x4),
// tag_times.arr, tag_points.arr (Tx4: left x,y, right x,y), calibration.txt, frames/.
void write_raw_episode(const std::filesystem::path& dir, const RawEpisode& raw);
RawEpisode read_raw_episode(const std::filesystem::path& dir);
// Raw episode directories under `root` (<root>/<scene>/<task>/<episode>), sorted.
std::vector<std::filesystem::path> find_raw_episodes(const std::filesystem::path& root);

}  // namespace spot::pipeline
