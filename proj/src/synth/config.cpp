#include <functional>
#include <map>
#include <sstream>

#include "spot/common/error.hpp"
#include "spot/synth/world.hpp"

namespace spot::synth {

namespace {

std::string num(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

std::string nums(const double* v, std::size_t n) {
  std::string out;
  for (std::size_t i = 0; i < n; ++i) out += (i ? " " : "") + num(v[i]);
  return out;
}

template <typename Config>
auto double_fields(Config& c) {
  return std::map<std::string, decltype(&c.focal)>{
      {"focal", &c.focal},
      {"fps", &c.fps},
      {"table_x_min", &c.table_x_min},
      {"table_x_max", &c.table_x_max},
      {"table_y_min", &c.table_y_min},
      {"table_y_max", &c.table_y_max},
      {"clearance", &c.clearance},
      {"object_radius", &c.object_radius},
      {"target_half", &c.target_half},
      {"clutter_jitter", &c.clutter_jitter},
      {"grasp_pitch", &c.grasp_pitch},
      {"approach_backoff", &c.approach_backoff},
      {"grasp_height", &c.grasp_height},
      {"lift_height", &c.lift_height},
      {"place_height", &c.place_height},
      {"retreat_backoff", &c.retreat_backoff},
      {"retreat_rise", &c.retreat_rise},
      {"w_max", &c.w_max},
      {"w_grasp", &c.w_grasp},
      {"max_speed", &c.max_speed},
      {"position_jitter", &c.position_jitter},
      {"yaw_jitter", &c.yaw_jitter},
      {"duration_jitter", &c.duration_jitter},
      {"width_jitter", &c.width_jitter},
      {"tracking_rate", &c.tracking_rate},
      {"camera_latency", &c.camera_latency},
      {"tracking_latency", &c.tracking_latency},
      {"tag_dist_min", &c.tag_dist_min},
      {"tag_dist_max", &c.tag_dist_max},
      {"tag_noise", &c.tag_noise},
  };
}

template <typename Config>
auto int_fields(Config& c) {
  return std::map<std::string, decltype(&c.image_width)>{
      {"episodes_per_scene", &c.episodes_per_scene},
      {"episodes_per_task", &c.episodes_per_task},
      {"image_width", &c.image_width},
      {"image_height", &c.image_height},
      {"distractors", &c.distractors},
  };
}

}  // namespace

SceneKind parse_scene_kind(const std::string& name) {
  if (name == "structured") return SceneKind::kStructured;
  if (name == "cluttered") return SceneKind::kCluttered;
  if (name == "random") return SceneKind::kRandom;
  throw ConfigError("unknown scene kind '" + name + "'");
}

std::string scene_kind_name(SceneKind k) {
  switch (k) {
    case SceneKind::kStructured: return "structured";
    case SceneKind::kCluttered: return "cluttered";
    case SceneKind::kRandom: return "random";
  }
  throw InternalError("bad scene kind");
}

SynthConfig SynthConfig::from_kv(const KvConfig& kv) {
  SynthConfig c;
  auto doubles = double_fields(c);
  auto ints = int_fields(c);
  for (const auto& key : kv.keys()) {
    if (auto it = doubles.find(key); it != doubles.end()) {
      *it->second = kv.get_double(key, 0.0);
    } else if (auto jt = ints.find(key); jt != ints.end()) {
      *jt->second = static_cast<int>(kv.get_int(key, 0));
    } else if (key == "home_position" || key == "camera_offset") {
      const auto v = kv.get_doubles(key);
      if (v.size() != 3) throw ConfigError(key + " needs 3 values");
      (key == "home_position" ? c.home_position : c.camera_offset) = Vec3(v[0], v[1], v[2]);
    } else if (key == "durations") {
      c.durations = kv.get_doubles(key);
    } else {
      throw ConfigError("unknown synthetic-world key '" + key + "'");
    }
  }
  c.validate();
  return c;
}

SynthConfig SynthConfig::load(const std::filesystem::path& path) { return from_kv(KvConfig::load(path)); }

KvConfig SynthConfig::to_kv() const {
  KvConfig kv;
  SynthConfig copy = *this;
  for (const auto& [k, p] : double_fields(copy)) kv.set(k, num(*p));
  for (const auto& [k, p] : int_fields(copy)) kv.set(k, std::to_string(*p));
  kv.set("home_position", nums(home_position.data(), 3));
  kv.set("camera_offset", nums(camera_offset.data(), 3));
  kv.set("durations", nums(durations.data(), durations.size()));
  return kv;
}

void SynthConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("synthetic-world config: " + what);
  };
  require(episodes_per_scene >= 1 && episodes_per_task >= 1, "episode counts must be positive");
  require(image_width >= 8 && image_height >= 8, "image too small");
  require(focal > 0 && fps > 0, "focal and fps must be positive");
  require(table_x_max > table_x_min && table_y_max > table_y_min, "empty table");
  require(clearance > 0 && object_radius > 0 && target_half > 0, "sizes must be positive");
  require(durations.size() == 10, "durations needs 10 values");
  for (double d : durations) require(d > 0, "durations must be positive");
  require(w_max > 0 && w_grasp >= 0 && w_grasp <= w_max, "need 0 <= w_grasp <= w_max");
  require(duration_jitter >= 0 && duration_jitter < 0.5, "duration_jitter must lie in [0, 0.5)");
  require(tracking_rate > 0, "tracking_rate must be positive");
  require(tag_dist_max > tag_dist_min, "tag_dist_max must exceed tag_dist_min");
  require(distractors >= 0, "distractors must be >= 0");
}

}  // namespace spot::synth
