#include <gtest/gtest.h>

#include <filesystem>
#include <set>

#include "spot/common/array_io.hpp"
#include "spot/common/error.hpp"
#include "spot/dataset/annotations.hpp"
#include "spot/dataset/catalog.hpp"
#include "spot/dataset/norm.hpp"
#include "spot/dataset/samples.hpp"
#include "spot/dataset/split.hpp"
#include "spot/dataset/stats.hpp"
#include "support/episodes.hpp"
#include "support/split_fixtures.hpp"

namespace fs = std::filesystem;
using namespace spot;
using namespace spot::dataset;
using geometry::Pose;
using spot::testing::random_split_fixture;

namespace {

fs::path temp_root(const std::string& name) {
  auto p = fs::temp_directory_path() / ("spot_dataset_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

bool has_reason(const AnnotationSet& set, const std::string& key, const std::string& fragment) {
  for (const auto& s : set.skipped) {
    if (s.key == key && s.reason.find(fragment) != std::string::npos) return true;
  }
  return false;
}

}  // namespace

TEST(ParseKey, Examples) {
  const auto k = parse_key("scene1/put_fork1_to_plate1/ep003");
  EXPECT_EQ(k.scene, "scene1");
  EXPECT_EQ(k.task, "put_fork1_to_plate1");
  EXPECT_EQ(k.episode, "ep003");
  EXPECT_EQ(parse_key("scene1/put_fork1_to_plate1/ep003/"), k);
  EXPECT_EQ(parse_key("/scene1//put_fork1_to_plate1/ep003//"), k);
  EXPECT_EQ(parse_key("scene1\\put_fork1_to_plate1\\ep003"), k);
  EXPECT_EQ(parse_key("scene1/put_fork1_to_plate1/recording_output_processed/ep003"), k);
  EXPECT_THROW(parse_key("scene1/ep003"), ParseError);
  EXPECT_THROW(parse_key(""), ParseError);
  EXPECT_THROW(parse_key("a/b/c/d"), ParseError);
}

TEST(ParseAnnotations, Examples) {
  const std::string text = R"({
    "scene1/t1/ep000": {"boxes": [[1, 2, 10, 12], [20, 21, 30, 31]], "note": "ignored"},
    "scene1/t1/ep001": {"boxes": [[1, 2, 10, 12]]},
    "scene1/t1/ep002": {"boxes": [[10, 2, 1, 12], [20, 21, 30, 31]]},
    "scene1/t1/ep003": {"boxes": [[1, 2, 10, 12], [20, 21, 30, 31]], "object": [3, 3, 5, 5]},
    "scene1/t1/ep004": {"object": [3, 3, 5, 5], "target": [6, 6, 9, 9]},
    "scene1/t1/ep005": {"boxes": [[1, 2, 10, 12], [20, 21, 300, 31]]},
    "bad-key": {"boxes": [[1, 2, 10, 12], [20, 21, 30, 31]]},
    "scene1/t1/ep006": {"boxes": [[1, 2, "x", 12], [20, 21, 30, 31]]}
  })";
  const auto set = parse_annotations(text, [](const EpisodeKey&) { return std::optional(std::pair{64, 64}); });
  ASSERT_EQ(set.records.size(), 3u);
  const auto& a = set.records.at("scene1/t1/ep000");
  EXPECT_EQ(a.object, (Box{1, 2, 10, 12}));
  EXPECT_EQ(a.target, (Box{20, 21, 30, 31}));
  EXPECT_TRUE(has_reason(set, "scene1/t1/ep001", "missing target"));
  EXPECT_TRUE(has_reason(set, "scene1/t1/ep002", "degenerate"));
  EXPECT_EQ(set.records.at("scene1/t1/ep003").object, (Box{3, 3, 5, 5}));
  EXPECT_EQ(set.records.at("scene1/t1/ep003").target, (Box{20, 21, 30, 31}));
  EXPECT_EQ(set.records.at("scene1/t1/ep004").target, (Box{6, 6, 9, 9}));
  EXPECT_TRUE(has_reason(set, "scene1/t1/ep005", "exceeds image"));
  EXPECT_TRUE(has_reason(set, "bad-key", "unparseable"));
  EXPECT_TRUE(has_reason(set, "scene1/t1/ep006", "not a number"));
  EXPECT_EQ(set.skipped.size(), 5u);
}

TEST(ParseAnnotations, MalformedJsonThrows) {
  EXPECT_THROW(parse_annotations("{\"a\": [1,"), ParseError);
  EXPECT_THROW(parse_annotations("[1, 2]"), ParseError);
}

TEST(UpsertAnnotation, PreservesOtherEntriesAndRoundTrips) {
  std::vector<Annotation> recs{{"scene1/t1/ep000", {1, 2, 10, 12}, {20, 21, 30, 31}},
                               {"scene1/t2/ep000", {5, 5, 9, 9}, {40, 41, 50, 52}}};
  const auto text = annotations_to_json(recs);
  const auto updated = upsert_annotation(text, "scene1/t1/ep000", {2, 2, 11, 12}, {20, 22, 31, 31});
  const auto set = parse_annotations(updated);
  EXPECT_EQ(set.records.at("scene1/t1/ep000").object, (Box{2, 2, 11, 12}));
  EXPECT_EQ(set.records.at("scene1/t1/ep000").target, (Box{20, 22, 31, 31}));
  // The untouched entry keeps its exact serialized bytes.
  const auto entry = [](const std::string& t, const std::string& key) {
    const auto b = t.find("\"" + key + "\"");
    const auto e = t.find("\n  }", b);
    return t.substr(b, e - b);
  };
  EXPECT_EQ(entry(text, "scene1/t2/ep000"), entry(updated, "scene1/t2/ep000"));
  EXPECT_LT(updated.find("scene1/t1/ep000"), updated.find("scene1/t2/ep000"));
  const auto added = upsert_annotation(updated, "scene2/t9/ep001", {0, 0, 4, 4}, {5, 5, 8, 8});
  EXPECT_EQ(parse_annotations(added).records.size(), 3u);
  EXPECT_EQ(added.find(entry(updated, "scene1/t1/ep000")), updated.find(entry(updated, "scene1/t1/ep000")));
}

TEST(BuildSamples, StationaryEpisode) {
  pipeline::EpisodeRecord rec;
  rec.scene = "s";
  rec.task = "t";
  rec.episode = "e";
  Pose p;
  p.position = geometry::Vec3(0.1, -0.2, 0.3);
  for (int i = 0; i < 90; ++i) {
    rec.valid_indices.push_back(i);
    rec.pose_interp.push_back(p);
    rec.gripper_widths.push_back(0.05);
  }
  const auto samples = build_samples(rec, {4, 16, 3, false});
  ASSERT_EQ(samples.size(), 30u - 4u - 16u);
  for (const auto& s : samples) {
    for (std::size_t i = 0; i < s.future_actions.size(); i += 10) {
      const double expect[10] = {0, 0, 0, 1, 0, 0, 0, 1, 0, 0.05};
      for (int d = 0; d < 10; ++d) EXPECT_NEAR(s.future_actions[i + d], expect[d], 1e-15);
    }
  }
}

TEST(BuildSamples, ExactMinimumLengthGivesOneFinalSample) {
  spot::Rng rng(1);
  const int K = 4, H = 16, stride = 3;
  const auto rec = spot::testing::random_episode(rng, (K + H) * stride + 1);
  const auto samples = build_samples(rec, {K, H, stride, true});
  ASSERT_EQ(samples.size(), 1u);
  EXPECT_TRUE(samples[0].is_final_chunk);
  EXPECT_EQ(samples[0].timestep, K);
  EXPECT_EQ(samples[0].frame_index, K * stride);
  ASSERT_TRUE(samples[0].current_frame);
  EXPECT_EQ(*samples[0].current_frame, rec.frames.get(K * stride));
  EXPECT_EQ(*samples[0].first_frame, rec.frames.get(0));
  EXPECT_TRUE(build_samples(spot::testing::random_episode(rng, (K + H) * stride), {K, H, stride, false}).empty());
}

TEST(BuildSamples, CountFormulaAndSingleFinalFlag) {
  spot::Rng rng(2);
  for (int n : {10, 61, 62, 63, 64, 100, 150}) {
    const auto rec = spot::testing::random_episode(rng, n);
    for (int K : {0, 1, 4}) {
      const auto samples = build_samples(rec, {K, 16, 3, false});
      const int V = (n + 2) / 3;
      EXPECT_EQ(static_cast<int>(samples.size()), std::max(0, V - K - 16)) << n << " " << K;
      int finals = 0;
      for (const auto& s : samples) finals += s.is_final_chunk;
      EXPECT_EQ(finals, samples.empty() ? 0 : 1);
      if (!samples.empty()) {
        EXPECT_TRUE(samples.back().is_final_chunk);
      }
      for (const auto& s : samples) EXPECT_EQ(s.action_history.size(), static_cast<std::size_t>(K) * 10);
    }
  }
}

TEST(BuildSamples, ComposedWaypointsReproduceFuturePoses) {
  spot::Rng rng(3);
  const int stride = 3, K = 4, H = 16;
  for (int trial = 0; trial < 10; ++trial) {
    const auto rec = spot::testing::random_episode(rng, 90 + trial * 7);
    const auto track = subsample(rec, stride);
    for (const auto& s : build_samples(rec, {K, H, stride, false})) {
      const Pose& anchor = track.poses[s.timestep];
      const auto chunk = future_chunk(s);
      for (int h = 1; h <= H; ++h) {
        const Pose world = anchor * geometry::waypoint_decode(chunk[h - 1]);
        EXPECT_LT(spot::testing::max_abs_diff(world, track.poses[s.timestep + h]), 1e-9);
        EXPECT_DOUBLE_EQ(chunk[h - 1].grip, track.widths[s.timestep + h]);
      }
      for (int k = 0; k < K; ++k) {
        const auto w = geometry::Waypoint10::from_array(std::span<const double>(s.action_history).subspan(k * 10, 10));
        const Pose world = anchor * geometry::waypoint_decode(w);
        EXPECT_LT(spot::testing::max_abs_diff(world, track.poses[s.timestep - K + k]), 1e-9);
      }
    }
  }
}

TEST(PromptPayload, Variants) {
  const Box full{0, 0, 100, 100};
  const auto bbox = prompt_payload(PromptVariant::kBbox, full, Box{10, 10, 30, 50}, 100, 100);
  ASSERT_TRUE(bbox.object_box && bbox.target_box);
  EXPECT_EQ(*bbox.object_box, (std::array<double, 4>{0, 0, 1, 1}));
  EXPECT_FALSE(bbox.object_point);
  EXPECT_FALSE(bbox.rendered_frame);

  const auto point = prompt_payload(PromptVariant::kPoint, full, Box{10, 10, 30, 50}, 100, 100);
  ASSERT_TRUE(point.target_point);
  EXPECT_DOUBLE_EQ((*point.target_point)[0], 0.2);
  EXPECT_DOUBLE_EQ((*point.target_point)[1], 0.3);
  EXPECT_FALSE(point.object_box);

  const auto none = prompt_payload(PromptVariant::kNone, full, Box{10, 10, 30, 50}, 100, 100);
  EXPECT_FALSE(none.object_box || none.target_box || none.object_point || none.target_point || none.rendered_frame);

  auto frame = std::make_shared<const Raster>(spot::testing::solid_raster(100, 100, 90));
  EXPECT_THROW(prompt_payload(PromptVariant::kVisionBbox, full, full, 100, 100), ContractError);
  const auto vis = prompt_payload(PromptVariant::kVisionBbox, Box{5, 5, 20, 20}, Box{50, 50, 80, 70}, 100, 100, frame);
  ASSERT_TRUE(vis.rendered_frame);
  EXPECT_FALSE(vis.object_box || vis.object_point);
  EXPECT_EQ(vis.rendered_frame->at(5, 10), kObjectOutline);
  EXPECT_EQ(vis.rendered_frame->at(6, 10), kObjectOutline);
  EXPECT_EQ(vis.rendered_frame->at(7, 10), (Rgb{90, 90, 90}));
  EXPECT_EQ(vis.rendered_frame->at(79, 60), kTargetOutline);
  EXPECT_EQ(frame->at(5, 10), (Rgb{90, 90, 90}));
  const auto both =
      prompt_payload(PromptVariant::kVisionBboxAndBbox, Box{5, 5, 20, 20}, Box{50, 50, 80, 70}, 100, 100, frame);
  EXPECT_TRUE(both.rendered_frame && both.object_box && both.target_box);
  EXPECT_EQ(*both.rendered_frame, *vis.rendered_frame);

  EXPECT_THROW(parse_variant("bbox+text"), ConfigError);
  for (auto v : {PromptVariant::kNone, PromptVariant::kPoint, PromptVariant::kBbox, PromptVariant::kVisionBbox,
                 PromptVariant::kVisionBboxAndBbox}) {
    EXPECT_EQ(parse_variant(variant_name(v)), v);
  }
}

TEST(NormStats, Examples) {
  std::vector<std::vector<double>> constant{std::vector<double>(20, 3.0), std::vector<double>(10, 3.0)};
  const auto c = compute_norm_stats(constant);
  for (int d = 0; d < 10; ++d) {
    EXPECT_EQ(c.mean[d], 3.0);
    EXPECT_EQ(c.std[d], 1e-4);
  }
  std::vector<std::vector<double>> two{std::vector<double>(10, 0.0), std::vector<double>(10, 2.0)};
  const auto t = compute_norm_stats(two);
  for (int d = 0; d < 10; ++d) {
    EXPECT_DOUBLE_EQ(t.mean[d], 1.0);
    EXPECT_DOUBLE_EQ(t.std[d], 1.0);
  }
  EXPECT_THROW(compute_norm_stats(std::vector<std::vector<double>>{}), ContractError);
  EXPECT_THROW(t.normalize(std::vector<double>(7)), DimensionError);
}

TEST(NormStats, RoundTripAndPersistence) {
  spot::Rng rng(4);
  std::vector<std::vector<double>> chunks(50, std::vector<double>(160));
  for (auto& c : chunks) {
    for (auto& v : c) v = 3.0 * spot::standard_normal(rng) + 1.0;
  }
  const auto n = compute_norm_stats(chunks);
  for (const auto& c : chunks) {
    const auto back = n.denormalize(n.normalize(c));
    for (std::size_t i = 0; i < c.size(); ++i) EXPECT_NEAR(back[i], c[i], 1e-9);
  }
  const auto root = temp_root("norm");
  n.save(root / "norm.txt");
  const auto loaded = NormStats::load(root / "norm.txt");
  EXPECT_EQ(loaded.mean, n.mean);
  EXPECT_EQ(loaded.std, n.std);
  fs::remove_all(root);
}


TEST(MakeSplit, SingleTaskSceneFollowsThresholdRule) {
  std::vector<EpisodeRef> eps{{"s1/t/e0", "s1", "t", ""}, {"s1/t/e1", "s1", "t", ""}};
  const auto m = make_split(eps, 0.01, 0);
  EXPECT_TRUE(m.train.empty());
  EXPECT_EQ(m.val.size(), 2u);
}

TEST(MakeSplit, ThresholdStopsAtFirstReach) {
  std::vector<EpisodeRef> eps;
  for (int t = 0; t < 10; ++t) {
    for (int e = 0; e < 3; ++e) {
      const std::string task = "t" + std::to_string(t);
      eps.push_back({"s/" + task + "/e" + std::to_string(e), "s", task, ""});
    }
  }
  EXPECT_EQ(make_split(eps, 0.1, 7).val.size(), 3u);
  EXPECT_EQ(make_split(eps, 0.11, 7).val.size(), 6u);
  EXPECT_EQ(make_split(eps, 0.2, 7).val.size(), 6u);
}

TEST(MakeSplit, InvalidRatio) {
  std::vector<EpisodeRef> eps{{"s/t/e", "s", "t", ""}};
  EXPECT_THROW(make_split(eps, 0.0, 0), ConfigError);
  EXPECT_THROW(make_split(eps, 1.0, 0), ConfigError);
  EXPECT_THROW(make_split(eps, -0.5, 0), ConfigError);
}

TEST(MakeSplit, DisjointWholeTasksAndDeterministic) {
  for (int trial = 0; trial < 100; ++trial) {
    spot::Rng rng(1000 + trial);
    const auto eps = random_split_fixture(rng, 1 + trial % 4, 8, 5);
    const double ratio = 0.05 + 0.5 * spot::uniform01(rng);
    const auto m = make_split(eps, ratio, trial);
    std::set<std::string> train_keys, train_tasks;
    for (const auto& e : m.train) {
      train_keys.insert(e.key);
      train_tasks.insert(e.scene + "/" + e.task);
    }
    for (const auto& e : m.val) {
      EXPECT_FALSE(train_keys.count(e.key));
      EXPECT_FALSE(train_tasks.count(e.scene + "/" + e.task));
    }
    EXPECT_EQ(m.train.size() + m.val.size(), eps.size());
    EXPECT_EQ(m.to_json(), make_split(eps, ratio, trial).to_json());
  }
}

TEST(MakeSplit, ManifestJsonRoundTrip) {
  spot::Rng rng(9);
  const auto m = make_split(random_split_fixture(rng, 3, 6, 4), 0.2, 42);
  EXPECT_EQ(SplitManifest::from_json(m.to_json()), m);
  const auto root = temp_root("manifest");
  m.save(root / "split_manifest.json");
  EXPECT_EQ(SplitManifest::load(root / "split_manifest.json"), m);
  fs::remove_all(root);
  EXPECT_THROW(SplitManifest::from_json("{}"), ParseError);
}

TEST(SplitTvDistance, Examples) {
  auto ref = [](const std::string& scene, int i) {
    return EpisodeRef{scene + "/t" + std::to_string(i) + "/e", scene, "t" + std::to_string(i), ""};
  };
  SplitManifest same;
  same.train = {ref("a", 0), ref("b", 1)};
  same.val = {ref("a", 2), ref("b", 3)};
  EXPECT_DOUBLE_EQ(split_tv_distance(same), 0.0);
  SplitManifest apart;
  apart.train = {ref("a", 0), ref("a", 1)};
  apart.val = {ref("b", 2)};
  EXPECT_DOUBLE_EQ(split_tv_distance(apart), 1.0);
  SplitManifest hand;
  hand.train = {ref("a", 0), ref("a", 1), ref("a", 2), ref("b", 3)};
  hand.val = {ref("a", 4), ref("b", 5)};
  EXPECT_DOUBLE_EQ(split_tv_distance(hand), 0.25);
}

TEST(Catalog, LoadsAnnotatedEpisodesAndSkipsOthers) {
  const auto root = temp_root("catalog");
  spot::Rng rng(12);
  std::vector<Annotation> ann;
  for (int i = 0; i < 4; ++i) {
    auto rec = spot::testing::random_episode(rng, i == 3 ? 40 : 70, "scene1", "task" + std::to_string(i % 2),
                                             "ep00" + std::to_string(i));
    pipeline::write_processed(root, rec, false);
    if (i != 2) ann.push_back({rec.key(), *rec.prompt_object, *rec.prompt_target});
  }
  ann.push_back({"scene9/ghost/ep000", {1, 1, 4, 4}, {5, 5, 9, 9}});
  ann.push_back({"scene1/task1/ep001", {1, 1, 4, 4}, {5, 5, 90, 9}});
  write_file_atomic(root / kAnnotationFile, annotations_to_json(ann));
  const SampleConfig cfg{4, 16, 3, true};
  const auto cat = load_catalog(root, root / kAnnotationFile, cfg);
  ASSERT_EQ(cat.episodes.size(), 1u);
  EXPECT_EQ(cat.episodes[0].key(), "scene1/task0/ep000");
  EXPECT_EQ(cat.episodes[0].prompt_object, (Box{2, 3, 10, 12}));
  std::map<std::string, std::string> why;
  for (const auto& s : cat.skipped) why[s.key] = s.reason;
  EXPECT_NE(why["scene1/task1/ep001"].find("outside"), std::string::npos) << why["scene1/task1/ep001"];
  EXPECT_NE(why["scene1/task0/ep002"].find("missing prompt"), std::string::npos);
  EXPECT_NE(why["scene1/task1/ep003"].find("too short"), std::string::npos);
  EXPECT_NE(why["scene9/ghost/ep000"].find("no processed"), std::string::npos);

  const auto refs = cat.refs();
  ASSERT_EQ(refs.size(), 1u);
  EXPECT_EQ(refs[0].path, "scene1/task0/recording_output_processed/ep000");
  const auto samples = samples_for(cat, refs, cfg);
  EXPECT_EQ(samples.size(), static_cast<std::size_t>(24 - 20));
  EXPECT_THROW(samples_for(cat, {{"x/y/z", "x", "y", ""}}, cfg), PipelineError);
  fs::remove_all(root);
}

TEST(DatasetStats, WritesSidecars) {
  const auto root = temp_root("stats");
  spot::Rng rng(13);
  std::vector<Annotation> ann;
  for (int s = 1; s <= 2; ++s) {
    for (int t = 0; t < 3; ++t) {
      auto rec = spot::testing::random_episode(rng, 75, "scene" + std::to_string(s), "task" + std::to_string(t),
                                               "ep000");
      pipeline::write_processed(root, rec, false);
      ann.push_back({rec.key(), *rec.prompt_object, *rec.prompt_target});
    }
  }
  write_file_atomic(root / kAnnotationFile, annotations_to_json(ann));
  const SampleConfig cfg{4, 16, 3, false};
  const auto cat = load_catalog(root, root / kAnnotationFile, cfg);
  ASSERT_EQ(cat.episodes.size(), 6u);
  const auto m = make_split(cat.refs(), 0.3, 0);
  const auto out = root / "stats";
  write_dataset_stats(out, cat, m, cfg, 3);
  for (const char* f : {"summary.json", "episode_stats.csv", "count_stats.csv", "prompt_stats.csv", "image_stats.csv",
                        "outliers_train.csv", "outliers_val.csv"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
  const auto summary = read_file_bytes(out / "summary.json");
  EXPECT_NE(summary.find("\"num_episodes\": 6"), std::string::npos);
  EXPECT_NE(summary.find("\"num_samples\": 30"), std::string::npos);
  const auto outliers = read_file_bytes(out / "outliers_train.csv");
  EXPECT_EQ(std::count(outliers.begin(), outliers.end(), '\n'), 4);
  const auto episodes = read_file_bytes(out / "episode_stats.csv");
  EXPECT_EQ(std::count(episodes.begin(), episodes.end(), '\n'), 7);
  fs::remove_all(root);
}
