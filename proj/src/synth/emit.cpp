#include "spot/synth/emit.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "spot/common/array_io.hpp"
#include "spot/common/error.hpp"
#include "spot/common/rng.hpp"
#include "spot/dataset/annotations.hpp"
#include "spot/dataset/catalog.hpp"

namespace spot::synth {

namespace fs = std::filesystem;

namespace {

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[static_cast<std::size_t>(rng() % i)]);
}

std::string episode_name(int e) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "ep%03d", e);
  return buf;
}

}  // namespace

std::vector<EpisodePlan> plan_episodes(const SynthConfig& config, std::uint64_t seed) {
  config.validate();
  const int tasks = (config.episodes_per_scene + config.episodes_per_task - 1) / config.episodes_per_task;
  if (tasks > 45) throw ConfigError("at most 45 distinct object-target tasks per scene");
  const std::vector<std::string> target_names{"plate1", "plate2", "plate3", "bowl1", "bowl2",
                                              "bowl3",  "tray1",  "tray2",  "tray3"};
  std::vector<EpisodePlan> out;
  for (int s = 0; s < 3; ++s) {
    const std::string scene = "scene" + std::to_string(s + 1);
    const auto kind = static_cast<SceneKind>(s);
    Rng rng(combine_seed({seed, hash_string(scene), hash_string("tasks")}));
    std::vector<int> objs{0, 1, 2, 3, 4};
    std::vector<int> tgts{0, 1, 2, 3, 4, 5, 6, 7, 8};
    shuffle(objs, rng);
    shuffle(tgts, rng);
    int emitted = 0;
    for (int i = 0; i < tasks; ++i) {
      const std::string object = "fork" + std::to_string(objs[i % 5] + 1);
      const std::string target = target_names[tgts[i % 9]];
      const std::string task = "put_" + object + "_to_" + target;
      for (int e = 0; e < config.episodes_per_task && emitted < config.episodes_per_scene; ++e, ++emitted) {
        EpisodePlan p;
        p.scene = scene;
        p.task = task;
        p.episode = episode_name(e);
        p.kind = kind;
        p.object = object;
        p.target = target;
        p.layout_seed = kind == SceneKind::kRandom
                            ? combine_seed({seed, hash_string(scene), hash_string(task), static_cast<std::uint64_t>(e)})
                            : combine_seed({seed, hash_string(scene)});
        p.episode_seed = combine_seed({seed, hash_string(scene), hash_string(task), hash_string(p.episode)});
        out.push_back(std::move(p));
      }
    }
  }
  return out;
}

SynthEpisode generate_episode(const EpisodePlan& plan, const SynthConfig& config) {
  SynthEpisode ep;
  ep.plan = plan;
  ep.layout = gen_layout(plan.kind, plan.layout_seed, config);
  ep.layout.scene = plan.scene;
  ep.trajectory = gen_trajectory(ep.layout, plan.object, plan.target, plan.episode_seed, config);
  const Camera cam = Camera::from_config(config);
  const int n = static_cast<int>(std::floor(ep.trajectory.duration() * config.fps)) + 1;
  auto& rec = ep.record;
  rec.scene = plan.scene;
  rec.task = plan.task;
  rec.episode = plan.episode;
  rec.image_width = cam.width;
  rec.image_height = cam.height;
  for (int k = 0; k < n; ++k) {
    const double t = k / config.fps;
    ep.frame_times.push_back(t);
    const Pose ee = ep.trajectory.pose_at(t);
    const double w = ep.trajectory.width_at(t);
    rec.valid_indices.push_back(k);
    rec.pose_interp.push_back(ee);
    rec.gripper_widths.push_back(w);
    const auto world = layout_at(ep.layout, ep.trajectory, plan.object, t);
    rec.frames.put(k, render_frame(world, camera_pose_for(ee, config), EeState{w}, cam, config));
  }
  const auto boxes = gt_boxes(ep.layout, camera_pose_for(ep.trajectory.pose_at(0.0), config), plan.object,
                              plan.target, cam);
  if (boxes) {
    rec.prompt_object = boxes->first;
    rec.prompt_target = boxes->second;
    ep.boxes_ok = true;
  }
  return ep;
}

pipeline::RawEpisode raw_recording(const SynthEpisode& ep, const SynthConfig& config) {
  pipeline::RawEpisode raw;
  raw.scene = ep.plan.scene;
  raw.task = ep.plan.task;
  raw.episode = ep.plan.episode;
  auto& cal = raw.calibration;
  cal.camera_latency = config.camera_latency;
  cal.tracking_latency = config.tracking_latency;
  cal.camera_to_ee = camera_to_ee_extrinsic(config);
  cal.gripper = {config.tag_dist_min, config.tag_dist_max, 0.0, config.w_max};
  for (std::size_t k = 0; k < ep.frame_times.size(); ++k) {
    raw.frame_times.push_back(ep.frame_times[k] + config.camera_latency);
  }
  // Tracking brackets the camera span so every frame survives synchronization.
  const double margin = 2.0 / config.tracking_rate;
  const double t_end = ep.frame_times.back() + margin;
  for (int j = 0;; ++j) {
    const double t = -margin + j / config.tracking_rate;
    if (t > t_end) break;
    raw.tracking.push_back({t + config.tracking_latency, camera_pose_for(ep.trajectory.pose_at(t), config)});
  }
  Rng rng(combine_seed({ep.plan.episode_seed, hash_string("tags")}));
  const double cx = 0.5 * config.image_width, cy = config.image_height - 8.0;
  for (std::size_t k = 0; k < ep.frame_times.size(); ++k) {
    const double w = ep.trajectory.width_at(ep.frame_times[k]);
    double dist = config.tag_dist_min + (config.tag_dist_max - config.tag_dist_min) * (w / config.w_max);
    if (config.tag_noise > 0) dist += config.tag_noise * standard_normal(rng);
    raw.detections.push_back(
        {raw.frame_times[k], Eigen::Vector2d(cx - 0.5 * dist, cy), Eigen::Vector2d(cx + 0.5 * dist, cy)});
  }
  for (std::size_t k = 0; k < ep.frame_times.size(); ++k) {
    const auto idx = static_cast<std::int64_t>(k);
    raw.frames.put(idx, ep.record.frames.get(idx));
  }
  return raw;
}

EmitReport emit_dataset(const SynthConfig& config, std::uint64_t seed, const fs::path& root, EmitMode mode,
                        bool overwrite) {
  const auto plans = plan_episodes(config, seed);
  fs::create_directories(root);
  if (!overwrite) {
    for (const char* f : {dataset::kAnnotationFile, kSynthManifest}) {
      if (fs::exists(root / f)) throw PipelineError((root / f).string() + " exists (use overwrite)");
    }
  }
  EmitReport report;
  std::vector<dataset::Annotation> annotations;
  nlohmann::ordered_json episodes = nlohmann::ordered_json::array();
  for (const auto& plan : plans) {
    const auto ep = generate_episode(plan, config);
    if (mode == EmitMode::kProcessed) {
      pipeline::write_processed(root, ep.record, overwrite);
    } else {
      const auto dir = root / kRawDir / plan.scene / plan.task / plan.episode;
      if (fs::exists(dir) && !fs::is_empty(dir)) {
        if (!overwrite) throw PipelineError(dir.string() + " exists (use overwrite)");
        fs::remove_all(dir);
      }
      pipeline::write_raw_episode(dir, raw_recording(ep, config));
    }
    report.keys.push_back(plan.key());
    if (ep.boxes_ok) {
      annotations.push_back({plan.key(), *ep.record.prompt_object, *ep.record.prompt_target});
    } else {
      report.flagged.push_back(plan.key());
    }
    episodes.push_back({{"key", plan.key()},
                        {"kind", scene_kind_name(plan.kind)},
                        {"layout_seed", plan.layout_seed},
                        {"episode_seed", plan.episode_seed},
                        {"object", plan.object},
                        {"target", plan.target},
                        {"frames", ep.frame_times.size()},
                        {"boxes_ok", ep.boxes_ok}});
  }
  write_file_atomic(root / dataset::kAnnotationFile, dataset::annotations_to_json(annotations));
  nlohmann::ordered_json manifest;
  manifest["seed"] = seed;
  manifest["mode"] = mode == EmitMode::kProcessed ? "processed" : "raw";
  manifest["config"] = config.to_kv().to_string();
  manifest["episodes"] = episodes;
  write_file_atomic(root / kSynthManifest, manifest.dump(2) + "\n");
  return report;
}

}  // namespace spot::synth
