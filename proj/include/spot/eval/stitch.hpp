#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "spot/eval/evaluate.hpp"
#include "spot/geometry/pose.hpp"
#include "spot/pipeline/episode.hpp"

namespace spot::eval {

struct StitchPoint {
  int step = 0;  // subsampled timestep
  std::int64_t frame_index = 0;
  int anchor_step = -1;    // chunk anchor covering this step, -1 for the observed prefix
  bool predicted = false;  // false for steps 0..K, which are observed rather than predicted
  geometry::Vec3 predicted_position = geometry::Vec3::Zero();
  geometry::Vec3 true_position = geometry::Vec3::Zero();
  double error = 0;
};

struct StitchResult {
  std::string key;
  std::vector<int> anchors;
  std::vector<StitchPoint> points;  // one per subsampled timestep
  double final_error = 0;
};

// Chunks are executed back to back starting at step K (anchors K, K+H, ...),
// plus the last sample's chunk when the tail would otherwise be uncovered.
// Each chunk is placed in the world with its ground-truth anchor pose via
// geometry::stitch. Throws ContractError when the episode yields no samples.
StitchResult stitch_episode(const pipeline::EpisodeRecord& record, const dataset::SampleConfig& config,
                            const ChunkPredictor& predict);

std::string stitch_csv(const StitchResult& result);
std::string stitch_svg(const StitchResult& result);

// Writes <out_dir>/<scene>__<task>__<episode>.{csv,svg}.
void write_stitch_outputs(const std::filesystem::path& out_dir, const StitchResult& result);

}  // namespace spot::eval
