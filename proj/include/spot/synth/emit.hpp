#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "spot/pipeline/processing.hpp"
#include "spot/synth/world.hpp"

namespace spot::synth {

struct EpisodePlan {
  std::string scene;
  std::string task;
  std::string episode;
  SceneKind kind = SceneKind::kStructured;
  std::uint64_t layout_seed = 0;
  std::uint64_t episode_seed = 0;
  std::string object;
  std::string target;
  std::string key() const { return scene + "/" + task + "/" + episode; }
};

// scene1 structured, scene2 cluttered, scene3 random. Task i of a scene pairs
// object (i mod 5) with target (i mod 9) after per-scene permutations, so
// every pairing within a scene is distinct.
std::vector<EpisodePlan> plan_episodes(const SynthConfig& config, std::uint64_t seed);

struct SynthEpisode {
  EpisodePlan plan;
  WorldLayout layout;
  Trajectory trajectory;
  std::vector<double> frame_times;
  pipeline::EpisodeRecord record;  // frames held in memory
  bool boxes_ok = false;
};

SynthEpisode generate_episode(const EpisodePlan& plan, const SynthConfig& config);

// Receive-time streams for the pipeline: latency-shifted camera and tracking
// clocks, camera-pose tracking at tracking_rate, tag detections per frame.
pipeline::RawEpisode raw_recording(const SynthEpisode& episode, const SynthConfig& config);

enum class EmitMode { kProcessed, kRaw };

struct EmitReport {
  std::vector<std::string> keys;
  std::vector<std::string> flagged;  // episodes without valid first-frame boxes
};

inline constexpr const char* kSynthManifest = "synth_manifest.json";
inline constexpr const char* kRawDir = "raw";

// Processed mode writes the processed layout under `root`; raw mode writes raw
// recordings under root/raw. Both write root/annotations_merged.json and
// root/synth_manifest.json.
EmitReport emit_dataset(const SynthConfig& config, std::uint64_t seed, const std::filesystem::path& root,
                        EmitMode mode, bool overwrite);

}  // namespace spot::synth
