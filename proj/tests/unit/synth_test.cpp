#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "spot/common/array_io.hpp"
#include "spot/common/error.hpp"
#include "spot/dataset/annotations.hpp"
#include "spot/dataset/catalog.hpp"
#include "spot/dataset/samples.hpp"
#include "spot/synth/emit.hpp"
#include "spot/synth/world.hpp"

namespace fs = std::filesystem;
using namespace spot;
using namespace spot::synth;

namespace {

fs::path temp_root(const std::string& name) {
  auto p = fs::temp_directory_path() / ("spot_synth_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void expect_clearance(const WorldLayout& l, double clearance) {
  std::vector<const Instance*> all;
  for (const auto* g : {&l.objects, &l.targets, &l.distractors}) {
    for (const auto& i : *g) all.push_back(&i);
  }
  for (std::size_t i = 0; i < all.size(); ++i) {
    const auto& p = all[i]->position;
    EXPECT_GE(p.x(), l.table_x_min);
    EXPECT_LE(p.x(), l.table_x_max);
    EXPECT_GE(p.y(), l.table_y_min);
    EXPECT_LE(p.y(), l.table_y_max);
    for (std::size_t j = i + 1; j < all.size(); ++j) {
      EXPECT_GE(std::hypot(p.x() - all[j]->position.x(), p.y() - all[j]->position.y()), clearance);
    }
  }
}

std::string read_tree(const fs::path& root) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::string all;
  for (const auto& f : files) all += fs::relative(f, root).string() + "\n" + read_file_bytes(f);
  return all;
}

}  // namespace

TEST(GenLayout, DeterministicInSeed) {
  const SynthConfig c;
  for (auto kind : {SceneKind::kStructured, SceneKind::kCluttered, SceneKind::kRandom}) {
    const auto a = gen_layout(kind, 17, c);
    const auto b = gen_layout(kind, 17, c);
    ASSERT_EQ(a.objects.size(), b.objects.size());
    for (std::size_t i = 0; i < a.objects.size(); ++i) EXPECT_EQ(a.objects[i].position, b.objects[i].position);
    for (std::size_t i = 0; i < a.targets.size(); ++i) EXPECT_EQ(a.targets[i].position, b.targets[i].position);
  }
  const auto r1 = gen_layout(SceneKind::kRandom, 1, c);
  const auto r2 = gen_layout(SceneKind::kRandom, 2, c);
  EXPECT_NE(r1.objects[0].position, r2.objects[0].position);
}

TEST(GenLayout, StructuredOnExactGrid) {
  const auto l = gen_layout(SceneKind::kStructured, 5, SynthConfig{});
  ASSERT_EQ(l.objects.size(), 5u);
  ASSERT_EQ(l.targets.size(), 9u);
  EXPECT_TRUE(l.distractors.empty());
  for (int i = 0; i < 5; ++i) {
    EXPECT_EQ(l.objects[i].position.x(), -0.20 + 0.10 * i);
    EXPECT_EQ(l.objects[i].position.y(), -0.10);
  }
  for (int t = 0; t < 9; ++t) {
    EXPECT_EQ(l.targets[t].position.x(), -0.15 + 0.15 * (t % 3));
    EXPECT_EQ(l.targets[t].position.y(), 0.05 + 0.10 * (t / 3));
  }
  EXPECT_EQ(l.targets[0].name, "plate1");
  EXPECT_EQ(l.targets[4].name, "bowl2");
  EXPECT_EQ(l.targets[8].name, "tray3");
}

TEST(GenLayout, ClearanceOverManySeeds) {
  const SynthConfig c;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    expect_clearance(gen_layout(SceneKind::kRandom, seed, c), c.clearance);
    if (seed % 10 == 0) expect_clearance(gen_layout(SceneKind::kCluttered, seed, c), c.clearance);
    if (::testing::Test::HasFailure()) break;
  }
}

TEST(GenLayout, UnsatisfiableClearanceFails) {
  SynthConfig c;
  c.clearance = 0.3;
  EXPECT_THROW(gen_layout(SceneKind::kRandom, 0, c), GenerationError);
  EXPECT_THROW(gen_layout(SceneKind::kStructured, 0, c), GenerationError);
}

TEST(MinJerk, BoundaryConditions) {
  EXPECT_EQ(min_jerk(0.0), 0.0);
  EXPECT_EQ(min_jerk(1.0), 1.0);
  EXPECT_DOUBLE_EQ(min_jerk(0.5), 0.5);
  EXPECT_EQ(min_jerk_rate(0.0), 0.0);
  EXPECT_EQ(min_jerk_rate(1.0), 0.0);
  const double h = 1e-5;
  for (double u : {0.1, 0.37, 0.8}) {
    EXPECT_NEAR(min_jerk_rate(u), (min_jerk(u + h) - min_jerk(u - h)) / (2 * h), 1e-8);
  }
  // Second derivative vanishes at the ends.
  EXPECT_NEAR((min_jerk_rate(h) - min_jerk_rate(0.0)) / h, 0.0, 1e-3);
  EXPECT_NEAR((min_jerk_rate(1.0) - min_jerk_rate(1.0 - h)) / h, 0.0, 1e-3);
}

TEST(GenTrajectory, KeyframesAndBoundaryVelocity) {
  const SynthConfig c;
  const auto l = gen_layout(SceneKind::kCluttered, 3, c);
  const auto traj = gen_trajectory(l, "fork2", "bowl3", 99, c);
  ASSERT_EQ(traj.keyframes().size(), 11u);
  for (const auto& k : traj.keyframes()) {
    const auto p = traj.pose_at(k.time);
    EXPECT_LT((p.position - k.pose.position).norm(), 1e-9);
    EXPECT_LT((p.rotation - k.pose.rotation).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_NEAR(traj.width_at(k.time), k.width, 1e-12);
    EXPECT_LT(traj.velocity_at(k.time).norm(), 1e-9);
    // Approaching the keyframe from the left also lands on it.
    if (k.time > 0) {
      EXPECT_LT((traj.pose_at(k.time - 1e-12).position - k.pose.position).norm(), 1e-9);
    }
  }
  EXPECT_THROW(gen_trajectory(l, "fork9", "bowl3", 1, c), GenerationError);
  EXPECT_THROW(gen_trajectory(l, "fork1", "plate7", 1, c), GenerationError);
  EXPECT_THROW(gen_trajectory(l, "bowl1", "plate1", 1, c), GenerationError);
}

TEST(GenTrajectory, PassesObjectThenTargetWithinTolerance) {
  const SynthConfig c;
  const double tol = std::sqrt(2.0) * c.position_jitter + std::max(c.grasp_height, c.place_height) + 1e-12;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto l = gen_layout(SceneKind::kRandom, seed, c);
    const std::string obj = "fork" + std::to_string(1 + seed % 5);
    const std::string tgt = l.targets[seed % 9].name;
    const auto traj = gen_trajectory(l, obj, tgt, seed, c);
    const auto at_grasp = traj.pose_at(traj.grasp_time()).position;
    const auto at_place = traj.pose_at(traj.release_time()).position;
    EXPECT_LT((at_grasp - l.find(obj)->position).norm(), tol);
    EXPECT_LT((at_place - l.find(tgt)->position).norm(), tol);
    EXPECT_LT(traj.grasp_time(), traj.release_time());
    // Gripper open at start, closed while carrying, open at the end.
    EXPECT_EQ(traj.width_at(0.0), c.w_max);
    EXPECT_LE(traj.width_at(0.5 * (traj.grasp_time() + traj.release_time())), c.w_grasp + c.width_jitter);
    EXPECT_EQ(traj.width_at(traj.duration()), c.w_max);
    for (double t = 0.0; t <= traj.duration(); t += 0.01) {
      EXPECT_LE(traj.velocity_at(t).norm(), c.max_speed);
      const double w = traj.width_at(t);
      EXPECT_GE(w, 0.0);
      EXPECT_LE(w, c.w_max);
    }
  }
}

TEST(RenderFrame, ObjectAtImageCenterWhenLookedAt) {
  const SynthConfig c;
  const auto l = gen_layout(SceneKind::kStructured, 0, c);
  const auto& fork = l.objects[2];
  Pose cam;
  cam.rotation = look_rotation(0.0, std::numbers::pi / 2);  // straight down
  cam.position = fork.position + Vec3(0, 0, 0.3);
  const Camera camera = Camera::from_config(c);
  const auto px = camera.project(cam.inverse().apply(fork.position));
  ASSERT_TRUE(px);
  EXPECT_NEAR(px->first, 64.0, 1e-9);
  EXPECT_NEAR(px->second, 64.0, 1e-9);
  EeState ee{0.08};
  const auto img = render_frame(l, cam, ee, camera, c);
  EXPECT_EQ(img.at(64, 64), fork.color);
  EXPECT_EQ(img.at(63, 63), fork.color);
  EXPECT_EQ(img, render_frame(l, cam, ee, camera, c));
}

TEST(RenderFrame, EmptyLayoutIsBackgroundOnly) {
  SynthConfig c;
  c.camera_offset = Vec3(0, 0, -1);  // fingers behind the camera
  WorldLayout empty;
  const auto cam = Camera::from_config(c);
  const auto img = render_frame(empty, home_pose(gen_layout(SceneKind::kStructured, 0, c), c), EeState{}, cam, c);
  const Rgb bg = img.at(0, 0);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) ASSERT_EQ(img.at(x, y), bg);
  }
}

TEST(RenderFrame, HomeViewShowsWholeTable) {
  const SynthConfig c;
  const auto l = gen_layout(SceneKind::kStructured, 0, c);
  const auto cam = camera_pose_for(home_pose(l, c), c);
  const auto camera = Camera::from_config(c);
  for (double x : {l.table_x_min, l.table_x_max}) {
    for (double y : {l.table_y_min, l.table_y_max}) {
      const auto px = camera.project(cam.inverse().apply(Vec3(x, y, 0)));
      ASSERT_TRUE(px);
      EXPECT_GT(px->first, 0);
      EXPECT_LT(px->first, c.image_width);
      EXPECT_GT(px->second, 0);
      EXPECT_LT(px->second, c.image_height);
    }
  }
}

TEST(GtBoxes, ContainProjectedCentersAndClip) {
  const SynthConfig c;
  const auto camera = Camera::from_config(c);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto l = gen_layout(SceneKind::kRandom, seed, c);
    const auto cam = camera_pose_for(home_pose(l, c), c);
    const auto boxes = gt_boxes(l, cam, "fork1", l.targets[seed % 9].name, camera);
    ASSERT_TRUE(boxes);
    for (const auto& [box, name] : {std::pair{boxes->first, std::string("fork1")},
                                    std::pair{boxes->second, l.targets[seed % 9].name}}) {
      const auto px = camera.project(cam.inverse().apply(l.find(name)->position));
      ASSERT_TRUE(px);
      EXPECT_GE(px->first, box.x_min);
      EXPECT_LE(px->first, box.x_max);
      EXPECT_GE(px->second, box.y_min);
      EXPECT_LE(px->second, box.y_max);
      EXPECT_TRUE(box.well_formed());
      EXPECT_TRUE(box.inside(c.image_width, c.image_height));
    }
  }
  // Looking away from the table: nothing visible.
  const auto l = gen_layout(SceneKind::kStructured, 0, c);
  Pose away;
  away.rotation = look_rotation(std::numbers::pi, -0.3);
  away.position = Vec3(0, -0.5, 0.3);
  EXPECT_FALSE(gt_boxes(l, away, "fork1", "plate1", camera));
  // Half-visible instance: clipped box is still well formed.
  Pose edge;
  edge.rotation = look_rotation(0.0, std::numbers::pi / 2);
  edge.position = l.find("fork3")->position + Vec3(0.0, 0.3 * 64.0 / c.focal, 0.3);
  const auto clipped = gt_boxes(l, edge, "fork3", "fork3", camera);
  ASSERT_TRUE(clipped);
  EXPECT_LT(clipped->first.x_min, clipped->first.x_max);
  EXPECT_LT(clipped->first.y_min, clipped->first.y_max);
  EXPECT_TRUE(clipped->first.y_min == 0 || clipped->first.y_max == c.image_height);
}

TEST(PlanEpisodes, DistinctTasksAndCounts) {
  const SynthConfig c;
  const auto plans = plan_episodes(c, 0);
  ASSERT_EQ(plans.size(), 180u);
  std::set<std::string> keys, tasks;
  for (const auto& p : plans) {
    keys.insert(p.key());
    tasks.insert(p.scene + "/" + p.task);
    EXPECT_EQ(dataset::parse_key(p.key()).str(), p.key());
  }
  EXPECT_EQ(keys.size(), 180u);
  EXPECT_EQ(tasks.size(), 60u);
  EXPECT_EQ(plans[0].key().substr(0, 11), "scene1/put_");
}

TEST(GenerateEpisode, FrameZeroIdenticalWithinLayout) {
  SynthConfig c;
  const auto plans = plan_episodes(c, 0);
  // Structured and cluttered scenes share one layout across tasks.
  for (const std::string scene : {"scene1", "scene2"}) {
    std::vector<const EpisodePlan*> picked;
    for (const auto& p : plans) {
      if (p.scene == scene && (picked.empty() || p.task != picked.back()->task)) picked.push_back(&p);
      if (picked.size() == 3) break;
    }
    const auto a = generate_episode(*picked[0], c);
    const auto b = generate_episode(*picked[1], c);
    const auto d = generate_episode(*picked[2], c);
    EXPECT_EQ(a.record.frames.get(0), b.record.frames.get(0));
    EXPECT_EQ(a.record.frames.get(0), d.record.frames.get(0));
    EXPECT_NE(a.record.frames.get(60), b.record.frames.get(60));
  }
}

TEST(EmitDataset, ValidDeterministicAndAnnotated) {
  SynthConfig c;
  c.episodes_per_scene = 4;
  c.episodes_per_task = 2;
  const auto a = temp_root("emit_a");
  const auto b = temp_root("emit_b");
  const auto report = emit_dataset(c, 0, a, EmitMode::kProcessed, false);
  EXPECT_EQ(report.keys.size(), 12u);
  EXPECT_TRUE(report.flagged.empty());
  emit_dataset(c, 0, b, EmitMode::kProcessed, false);
  EXPECT_EQ(read_tree(a), read_tree(b));
  EXPECT_THROW(emit_dataset(c, 0, a, EmitMode::kProcessed, false), PipelineError);

  const auto ann = dataset::load_annotations(a / dataset::kAnnotationFile);
  EXPECT_EQ(ann.records.size(), 12u);
  EXPECT_TRUE(ann.skipped.empty());
  const dataset::SampleConfig sc{4, 16, 3, false};
  const auto cat = dataset::load_catalog(a, a / dataset::kAnnotationFile, sc);
  EXPECT_EQ(cat.episodes.size(), 12u);
  EXPECT_TRUE(cat.skipped.empty());
  for (const auto& rec : cat.episodes) {
    EXPECT_TRUE(pipeline::validate_episode(rec, 4, 16).ok);
    EXPECT_GE(dataset::build_samples(rec, sc).size(), 8u);
  }
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(EmitDataset, RawRecordingsReprocessToGroundTruth) {
  SynthConfig c;
  const auto plans = plan_episodes(c, 3);
  const auto ep = generate_episode(plans[70], c);
  const auto raw = raw_recording(ep, c);
  const auto root = temp_root("raw");
  pipeline::write_raw_episode(root / "x", raw);
  const auto rec = pipeline::process_episode(pipeline::read_raw_episode(root / "x"));
  ASSERT_EQ(rec.valid_indices, ep.record.valid_indices);
  for (std::size_t i = 0; i < rec.pose_interp.size(); ++i) {
    EXPECT_LT((rec.pose_interp[i].position - ep.record.pose_interp[i].position).norm(), 2e-3);
    EXPECT_LT(geometry::rotation_angle_between(rec.pose_interp[i].rotation, ep.record.pose_interp[i].rotation), 5e-3);
    EXPECT_NEAR(rec.gripper_widths[i], ep.record.gripper_widths[i], 1e-12);
  }
  EXPECT_EQ(rec.frames.get(0), ep.record.frames.get(0));
  fs::remove_all(root);
}

TEST(SynthConfig, KeyValueRoundTrip) {
  SynthConfig c;
  c.episodes_per_scene = 9;
  c.focal = 97.5;
  c.durations[3] = 0.45;
  const auto back = SynthConfig::from_kv(KvConfig::parse(c.to_kv().to_string()));
  EXPECT_EQ(back.episodes_per_scene, 9);
  EXPECT_EQ(back.focal, 97.5);
  EXPECT_EQ(back.durations, c.durations);
  EXPECT_EQ(back.home_position, c.home_position);
  EXPECT_THROW(SynthConfig::from_kv(KvConfig::parse("no_such_key = 1\n")), ConfigError);
  EXPECT_THROW(SynthConfig::from_kv(KvConfig::parse("durations = 1 2 3\n")), ConfigError);
}
