#include "spot/pipeline/episode.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "spot/common/array_io.hpp"
#include "spot/common/error.hpp"

namespace spot::pipeline {

namespace fs = std::filesystem;

std::string FrameStore::file_name(std::int64_t index) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "frame_%06lld.ppm", static_cast<long long>(index));
  return buf;
}

bool FrameStore::has(std::int64_t index) const {
  if (frames_.count(index)) return true;
  return !directory_.empty() && fs::exists(directory_ / file_name(index));
}

Raster FrameStore::get(std::int64_t index) const {
  if (auto it = frames_.find(index); it != frames_.end()) return it->second;
  if (directory_.empty()) throw PipelineError("frame " + std::to_string(index) + " not in frame store");
  return read_ppm(directory_ / file_name(index));
}

fs::path processed_dir(const fs::path& root, const std::string& scene, const std::string& task,
                       const std::string& episode) {
  return root / scene / task / "recording_output_processed" / episode;
}

void write_processed(const fs::path& root, const EpisodeRecord& record, bool overwrite) {
  const auto n = record.valid_indices.size();
  if (n == 0) throw PipelineError(record.key() + ": refusing to write an episode with no valid frames");
  if (record.pose_interp.size() != n || record.gripper_widths.size() != n) {
    throw PipelineError(record.key() + ": array length mismatch (valid_indices " + std::to_string(n) +
                        ", pose_interp " + std::to_string(record.pose_interp.size()) + ", gripper_widths " +
                        std::to_string(record.gripper_widths.size()) + ")");
  }
  const fs::path dir = processed_dir(root, record.scene, record.task, record.episode);
  if (fs::exists(dir) && !fs::is_empty(dir)) {
    if (!overwrite) throw PipelineError(dir.string() + ": target exists and is not empty (use overwrite)");
    fs::remove_all(dir);
  }
  fs::create_directories(dir / "frames");

  for (auto idx : record.valid_indices) write_ppm(dir / "frames" / FrameStore::file_name(idx), record.frames.get(idx));

  const std::uint64_t n64 = n;
  write_array(dir / "valid_indices.arr", "valid_indices", std::vector<std::uint64_t>{n64},
              std::span<const std::int64_t>(record.valid_indices));
  std::vector<double> poses;
  poses.reserve(n * 16);
  for (const auto& p : record.pose_interp) {
    const auto m = p.to_row_major();
    poses.insert(poses.end(), m.begin(), m.end());
  }
  write_array(dir / "pose_interp.arr", "pose_interp", std::vector<std::uint64_t>{n64, 4, 4},
              std::span<const double>(poses));
  write_array(dir / "gripper_widths.arr", "gripper_widths", std::vector<std::uint64_t>{n64},
              std::span<const double>(record.gripper_widths));
}

EpisodeRecord read_processed(const fs::path& episode_dir) {
  EpisodeRecord rec;
  rec.episode = episode_dir.filename().string();
  rec.task = episode_dir.parent_path().parent_path().filename().string();
  rec.scene = episode_dir.parent_path().parent_path().parent_path().filename().string();
  for (const char* name : {"valid_indices.arr", "pose_interp.arr", "gripper_widths.arr"}) {
    if (!fs::exists(episode_dir / name)) throw PipelineError(episode_dir.string() + ": missing " + name);
  }
  rec.valid_indices = read_array_i64(episode_dir / "valid_indices.arr").values;
  const auto poses = read_array_f64(episode_dir / "pose_interp.arr");
  if (poses.shape.size() != 3 || poses.shape[1] != 4 || poses.shape[2] != 4) {
    throw PipelineError(episode_dir.string() + ": pose_interp must be N x 4 x 4");
  }
  for (std::size_t i = 0; i < poses.shape[0]; ++i) {
    rec.pose_interp.push_back(geometry::Pose::from_row_major(std::span<const double>(poses.values).subspan(i * 16, 16)));
  }
  rec.gripper_widths = read_array_f64(episode_dir / "gripper_widths.arr").values;
  rec.frames = FrameStore(episode_dir / "frames");
  if (!rec.valid_indices.empty() && rec.frames.has(rec.valid_indices.front())) {
    const Raster first = rec.frames.get(rec.valid_indices.front());
    rec.image_width = first.width;
    rec.image_height = first.height;
  }
  return rec;
}

std::vector<fs::path> find_processed_episodes(const fs::path& root) {
  std::vector<fs::path> out;
  if (!fs::exists(root)) return out;
  for (const auto& scene : fs::directory_iterator(root)) {
    if (!scene.is_directory()) continue;
    for (const auto& task : fs::directory_iterator(scene.path())) {
      const auto proc = task.path() / "recording_output_processed";
      if (!fs::is_directory(proc)) continue;
      for (const auto& ep : fs::directory_iterator(proc)) {
        if (ep.is_directory()) out.push_back(ep.path());
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

ValidationReport validate_episode(const EpisodeRecord& record, int history, int horizon) {
  ValidationReport rep;
  const auto n = record.valid_indices.size();
  if (n == 0) rep.fail("valid_indices missing or empty");
  if (record.pose_interp.empty()) rep.fail("pose_interp missing or empty");
  if (record.gripper_widths.empty()) rep.fail("gripper_widths missing or empty");
  if (record.pose_interp.size() != n || record.gripper_widths.size() != n) {
    rep.fail("array length mismatch: valid_indices " + std::to_string(n) + ", pose_interp " +
             std::to_string(record.pose_interp.size()) + ", gripper_widths " +
             std::to_string(record.gripper_widths.size()));
  }
  for (std::size_t i = 1; i < n; ++i) {
    if (record.valid_indices[i] <= record.valid_indices[i - 1]) {
      rep.fail("valid_indices not strictly increasing at position " + std::to_string(i));
      break;
    }
  }
  const auto needed = static_cast<std::size_t>(history + horizon + 1);
  if (n < needed) {
    rep.fail("too short: " + std::to_string(n) + " valid frames, need at least " + std::to_string(needed));
  }
  for (std::size_t i = 0; i < record.pose_interp.size(); ++i) {
    const auto& p = record.pose_interp[i];
    if (!geometry::is_rotation(p.rotation) || !p.position.allFinite()) {
      rep.fail("pose " + std::to_string(i) + " is not a valid rigid transform");
      break;
    }
  }
  for (double w : record.gripper_widths) {
    if (!std::isfinite(w) || w < 0.0) {
      rep.fail("gripper width not finite and non-negative");
      break;
    }
  }
  if (n > 0 && !record.frames.has(record.valid_indices.front())) rep.fail("first frame missing from frame store");
  auto check_box = [&](const std::optional<Box>& box, const char* role) {
    if (!box) {
      rep.fail(std::string(role) + " box missing");
    } else if (!box->well_formed()) {
      rep.fail(std::string(role) + " box malformed: requires x_min < x_max and y_min < y_max");
    } else if (record.image_width > 0 && !box->inside(record.image_width, record.image_height)) {
      rep.fail(std::string(role) + " box outside image bounds");
    }
  };
  check_box(record.prompt_object, "object");
  check_box(record.prompt_target, "target");
  return rep;
}

}  // namespace spot::pipeline
