#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "spot/common/kv_config.hpp"
#include "spot/common/raster.hpp"
#include "spot/geometry/pose.hpp"
#include "spot/pipeline/episode.hpp"

namespace spot::synth {

using geometry::Pose;
using geometry::Vec3;

enum class SceneKind { kStructured, kCluttered, kRandom };
SceneKind parse_scene_kind(const std::string& name);
std::string scene_kind_name(SceneKind k);

// Key-value configuration of the synthetic benchmark. Lengths in meters,
// durations in seconds, angles in degrees.
struct SynthConfig {
  int episodes_per_scene = 60;
  int episodes_per_task = 3;
  int image_width = 128;
  int image_height = 128;
  double focal = 110.0;
  double fps = 30.0;

  double table_x_min = -0.25, table_x_max = 0.25;
  double table_y_min = -0.15, table_y_max = 0.30;
  double clearance = 0.08;
  double object_radius = 0.022;
  double target_half = 0.035;
  int distractors = 3;
  double clutter_jitter = 0.02;

  Vec3 home_position{0.0, -0.32, 0.42};
  Vec3 camera_offset{0.0, 0.04, 0.08};  // EE origin in the camera frame
  double grasp_pitch = 70.0;
  double approach_backoff = 0.10;
  double grasp_height = 0.015;
  double lift_height = 0.12;
  double place_height = 0.03;
  double retreat_backoff = 0.10;
  double retreat_rise = 0.05;

  // Segment durations: start hold, approach, descend, close, lift, hold,
  // transfer, lower, release, retreat.
  std::vector<double> durations{0.4, 0.9, 0.4, 0.3, 0.4, 0.5, 0.7, 0.3, 0.2, 0.3};

  double w_max = 0.08;
  double w_grasp = 0.025;
  double max_speed = 1.5;

  double position_jitter = 0.008;
  double yaw_jitter = 3.0;
  double duration_jitter = 0.05;
  double width_jitter = 0.002;

  // Raw-recording mode.
  double tracking_rate = 60.0;
  double camera_latency = 0.05;
  double tracking_latency = 0.02;
  double tag_dist_min = 20.0;
  double tag_dist_max = 100.0;
  double tag_noise = 0.0;

  static SynthConfig from_kv(const KvConfig& kv);  // unknown keys throw ConfigError
  static SynthConfig load(const std::filesystem::path& path);
  KvConfig to_kv() const;
  void validate() const;
};

struct Instance {
  std::string name;      // fork1, plate2, distractor1, ...
  std::string category;  // fork, plate, bowl, tray, distractor
  Vec3 position = Vec3::Zero();
  Rgb color{0, 0, 0};
  double size = 0.0;  // disc radius or square half-extent
  bool square = false;
};

struct WorldLayout {
  std::string scene;
  SceneKind kind = SceneKind::kStructured;
  std::vector<Instance> objects;
  std::vector<Instance> targets;
  std::vector<Instance> distractors;
  double table_x_min = 0, table_x_max = 0, table_y_min = 0, table_y_max = 0;

  const Instance* find(const std::string& name) const;
};

// Throws GenerationError when the clearance cannot be met after bounded retries.
WorldLayout gen_layout(SceneKind kind, std::uint64_t seed, const SynthConfig& config);

// Quintic minimum-jerk blend: zero velocity and acceleration at both ends.
double min_jerk(double u);
double min_jerk_rate(double u);  // d/du

struct Keyframe {
  double time = 0.0;
  Pose pose;
  double width = 0.0;
};

// Piecewise minimum-jerk EE motion between keyframes.
class Trajectory {
 public:
  Trajectory() = default;
  explicit Trajectory(std::vector<Keyframe> keys, double grasp_time, double release_time);

  double duration() const { return keys_.back().time; }
  Pose pose_at(double t) const;
  double width_at(double t) const;
  Vec3 velocity_at(double t) const;
  const std::vector<Keyframe>& keyframes() const { return keys_; }
  // The object is carried on (grasp_time, release_time].
  bool holding(double t) const { return t > grasp_time_ && t <= release_time_; }
  double grasp_time() const { return grasp_time_; }
  double release_time() const { return release_time_; }

 private:
  std::vector<Keyframe> keys_;
  double grasp_time_ = 0.0;
  double release_time_ = 0.0;
};

// EE axes: x = right (horizontal), y = forward x right, z = forward.
geometry::Mat3 look_rotation(double yaw_rad, double pitch_rad);
Pose home_pose(const WorldLayout& layout, const SynthConfig& config);

// Throws GenerationError for names not in the layout.
Trajectory gen_trajectory(const WorldLayout& layout, const std::string& object, const std::string& target,
                          std::uint64_t seed, const SynthConfig& config);

struct Camera {
  int width = 128;
  int height = 128;
  double fx = 110.0, fy = 110.0, cx = 64.0, cy = 64.0;
  static Camera from_config(const SynthConfig& c);
  // Pixel coordinates of a camera-frame point; nullopt behind the camera.
  std::optional<std::pair<double, double>> project(const Vec3& p_cam) const;
};

// Camera pose for an EE pose (rigid mount).
Pose camera_pose_for(const Pose& ee, const SynthConfig& config);
Pose camera_to_ee_extrinsic(const SynthConfig& config);

struct EeState {
  double width = 0.08;
};

// Flat-shaded ray-cast view of table, instances (horizontal discs and squares
// at their own heights, nearest wins) and gripper fingers.
Raster render_frame(const WorldLayout& layout, const Pose& camera_pose, const EeState& ee, const Camera& camera,
                    const SynthConfig& config);

// Tight pixel boxes of the two instances' visible footprints, or nullopt if
// either is entirely off-screen.
std::optional<std::pair<pipeline::Box, pipeline::Box>> gt_boxes(const WorldLayout& layout, const Pose& camera_pose,
                                                                 const std::string& object, const std::string& target,
                                                                 const Camera& camera);

// World state at time t: the carried object follows the EE origin and stays
// where it was released.
WorldLayout layout_at(const WorldLayout& layout, const Trajectory& trajectory, const std::string& object, double t);

}  // namespace spot::synth
