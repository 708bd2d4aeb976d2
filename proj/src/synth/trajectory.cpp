#include <algorithm>
#include <cmath>
#include <numbers>

#include "spot/common/error.hpp"
#include "spot/common/rng.hpp"
#include "spot/synth/world.hpp"

namespace spot::synth {

using geometry::Mat3;

double min_jerk(double u) {
  u = std::clamp(u, 0.0, 1.0);
  return std::clamp(u * u * u * (10.0 + u * (-15.0 + 6.0 * u)), 0.0, 1.0);
}

double min_jerk_rate(double u) {
  u = std::clamp(u, 0.0, 1.0);
  return 30.0 * u * u * (1.0 - u) * (1.0 - u);
}

Trajectory::Trajectory(std::vector<Keyframe> keys, double grasp_time, double release_time)
    : keys_(std::move(keys)), grasp_time_(grasp_time), release_time_(release_time) {
  if (keys_.size() < 2) throw ContractError("trajectory needs at least 2 keyframes");
  for (std::size_t i = 1; i < keys_.size(); ++i) {
    if (!(keys_[i].time > keys_[i - 1].time)) throw ContractError("keyframe times must increase");
  }
}

namespace {

// Segment index and local phase for time t (clamped to the trajectory span).
std::pair<std::size_t, double> locate(const std::vector<Keyframe>& keys, double t) {
  t = std::clamp(t, keys.front().time, keys.back().time);
  auto it = std::upper_bound(keys.begin(), keys.end(), t, [](double v, const Keyframe& k) { return v < k.time; });
  std::size_t i = static_cast<std::size_t>(it - keys.begin());
  if (i >= keys.size()) i = keys.size() - 1;
  i = i == 0 ? 0 : i - 1;
  return {i, (t - keys[i].time) / (keys[i + 1].time - keys[i].time)};
}

}  // namespace

Pose Trajectory::pose_at(double t) const {
  const auto [i, u] = locate(keys_, t);
  const auto& a = keys_[i];
  const auto& b = keys_[i + 1];
  if (u == 0.0) return a.pose;
  if (u == 1.0) return b.pose;
  const double s = min_jerk(u);
  Pose p;
  p.rotation = geometry::slerp(a.pose.rotation, b.pose.rotation, s);
  p.position = geometry::lerp(a.pose.position, b.pose.position, s);
  return p;
}

double Trajectory::width_at(double t) const {
  const auto [i, u] = locate(keys_, t);
  const auto& a = keys_[i];
  const auto& b = keys_[i + 1];
  if (u == 0.0) return a.width;
  if (u == 1.0) return b.width;
  return a.width + (b.width - a.width) * min_jerk(u);
}

Vec3 Trajectory::velocity_at(double t) const {
  const auto [i, u] = locate(keys_, t);
  const auto& a = keys_[i];
  const auto& b = keys_[i + 1];
  return (b.pose.position - a.pose.position) * (min_jerk_rate(u) / (b.time - a.time));
}

Mat3 look_rotation(double yaw, double pitch) {
  const Vec3 f(std::cos(pitch) * std::sin(yaw), std::cos(pitch) * std::cos(yaw), -std::sin(pitch));
  const Vec3 r(std::cos(yaw), -std::sin(yaw), 0.0);
  Mat3 m;
  m.col(0) = r;
  m.col(1) = f.cross(r);
  m.col(2) = f;
  return m;
}

Pose home_pose(const WorldLayout& layout, const SynthConfig& config) {
  const Vec3& h = config.home_position;
  const Vec3 center(0.5 * (layout.table_x_min + layout.table_x_max), 0.5 * (layout.table_y_min + layout.table_y_max),
                    0.0);
  const Vec3 d = center - h;
  Pose p;
  p.rotation = look_rotation(std::atan2(d.x(), d.y()), std::atan2(-d.z(), std::hypot(d.x(), d.y())));
  p.position = h;
  return p;
}

Trajectory gen_trajectory(const WorldLayout& layout, const std::string& object, const std::string& target,
                          std::uint64_t seed, const SynthConfig& c) {
  const Instance* obj = layout.find(object);
  const Instance* tgt = layout.find(target);
  if (!obj || obj->category == "distractor" || obj->square) {
    throw GenerationError("object '" + object + "' not in layout");
  }
  if (!tgt || !tgt->square || tgt->category == "distractor") {
    throw GenerationError("target '" + target + "' not in layout");
  }
  Rng rng(combine_seed({seed, hash_string("trajectory")}));
  auto sym = [&](double amp) { return amp * (2.0 * uniform01(rng) - 1.0); };
  const double deg = std::numbers::pi / 180.0;

  const Pose home = home_pose(layout, c);
  const Vec3& hp = c.home_position;
  const double pitch = c.grasp_pitch * deg;

  const Vec3 grasp_pos = obj->position + Vec3(sym(c.position_jitter), sym(c.position_jitter), c.grasp_height);
  const double yaw_o = std::atan2(grasp_pos.x() - hp.x(), grasp_pos.y() - hp.y()) + sym(c.yaw_jitter) * deg;
  const Mat3 r_grasp = look_rotation(yaw_o, pitch);
  const Vec3 pregrasp_pos = grasp_pos - c.approach_backoff * r_grasp.col(2);
  const Vec3 lift_pos = grasp_pos + Vec3(0, 0, c.lift_height);

  const Vec3 place_pos = tgt->position + Vec3(sym(c.position_jitter), sym(c.position_jitter), c.place_height);
  const double yaw_t = std::atan2(place_pos.x() - hp.x(), place_pos.y() - hp.y()) + sym(c.yaw_jitter) * deg;
  const Mat3 r_place = look_rotation(yaw_t, pitch);
  const Vec3 preplace_pos = place_pos - c.approach_backoff * r_place.col(2);
  const Vec3 retreat_pos = place_pos - c.retreat_backoff * r_place.col(2) + Vec3(0, 0, c.retreat_rise);

  const double w_closed = std::clamp(c.w_grasp + sym(c.width_jitter), 0.0, c.w_max);
  std::vector<double> d(c.durations);
  for (auto& v : d) v *= 1.0 + sym(c.duration_jitter);

  auto pose = [](const Mat3& r, const Vec3& p) {
    Pose q;
    q.rotation = r;
    q.position = p;
    return q;
  };
  std::vector<Keyframe> keys;
  double t = 0.0;
  auto add = [&](double dt, const Pose& p, double w) {
    t += dt;
    keys.push_back({t, p, w});
  };
  add(0.0, home, c.w_max);
  add(d[0], home, c.w_max);
  add(d[1], pose(r_grasp, pregrasp_pos), c.w_max);
  add(d[2], pose(r_grasp, grasp_pos), c.w_max);
  add(d[3], pose(r_grasp, grasp_pos), w_closed);
  const double grasp_time = t;
  add(d[4], pose(r_grasp, lift_pos), w_closed);
  add(d[5], pose(r_grasp, lift_pos), w_closed);
  add(d[6], pose(r_place, preplace_pos), w_closed);
  add(d[7], pose(r_place, place_pos), w_closed);
  const double release_time = t;
  add(d[8], pose(r_place, place_pos), c.w_max);
  add(d[9], pose(r_place, retreat_pos), c.w_max);
  return Trajectory(std::move(keys), grasp_time, release_time);
}

WorldLayout layout_at(const WorldLayout& layout, const Trajectory& trajectory, const std::string& object, double t) {
  WorldLayout out = layout;
  Instance* obj = nullptr;
  for (auto& o : out.objects) {
    if (o.name == object) obj = &o;
  }
  if (!obj || t <= trajectory.grasp_time()) return out;
  const Vec3 offset = obj->position - trajectory.pose_at(trajectory.grasp_time()).position;
  obj->position = trajectory.pose_at(std::min(t, trajectory.release_time())).position + offset;
  return out;
}

}  // namespace spot::synth
