#include "spot/pipeline/processing.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "spot/common/array_io.hpp"
#include "spot/common/error.hpp"
#include "spot/common/kv_config.hpp"

namespace spot::pipeline {

namespace fs = std::filesystem;
using geometry::Pose;

namespace {

void require_increasing(std::span<const double> times, const std::string& what) {
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) throw PipelineError(what + " times are not strictly increasing");
  }
}

std::string join_doubles(std::span<const double> v) {
  std::ostringstream out;
  out.precision(17);
  for (std::size_t i = 0; i < v.size(); ++i) out << (i ? " " : "") << v[i];
  return out.str();
}

}  // namespace

SyncResult synchronize(const RawEpisode& raw) {
  const auto& cal = raw.calibration;
  if (!std::isfinite(cal.camera_latency) || !std::isfinite(cal.tracking_latency)) {
    throw PipelineError("latencies must be finite");
  }
  if (raw.frame_times.empty()) throw PipelineError("no camera frames");
  if (raw.tracking.size() < 2) throw PipelineError("need at least 2 tracking samples");
  require_increasing(raw.frame_times, "camera");
  std::vector<double> track_times;
  for (const auto& s : raw.tracking) track_times.push_back(s.time);
  require_increasing(track_times, "tracking");

  const double cam_begin = raw.frame_times.front() - cal.camera_latency;
  const double cam_end = raw.frame_times.back() - cal.camera_latency;
  const double trk_begin = track_times.front() - cal.tracking_latency;
  const double trk_end = track_times.back() - cal.tracking_latency;
  SyncResult res;
  res.overlap_begin = std::max(cam_begin, trk_begin);
  res.overlap_end = std::min(cam_end, trk_end);
  if (res.overlap_begin > res.overlap_end) throw PipelineError("no temporal overlap");
  for (std::size_t i = 0; i < raw.frame_times.size(); ++i) {
    const double t = raw.frame_times[i] - cal.camera_latency;
    if (t >= res.overlap_begin && t <= res.overlap_end) {
      res.valid_indices.push_back(static_cast<std::int64_t>(i));
      res.corrected_times.push_back(t);
    }
  }
  if (res.valid_indices.empty()) throw PipelineError("no temporal overlap");
  return res;
}

std::vector<Pose> interpolate_poses(std::span<const TimedPose> track, std::span<const double> query_times) {
  if (track.size() < 2) throw PipelineError("interpolate_poses: need at least 2 samples");
  std::vector<Pose> out;
  out.reserve(query_times.size());
  for (double q : query_times) {
    if (q < track.front().time || q > track.back().time) {
      throw PipelineError("interpolate_poses: query time " + std::to_string(q) + " outside tracking range");
    }
    auto hi = std::lower_bound(track.begin(), track.end(), q,
                               [](const TimedPose& s, double t) { return s.time < t; });
    if (hi->time == q) {
      out.push_back(hi->pose);
      continue;
    }
    const auto lo = hi - 1;
    const double u = (q - lo->time) / (hi->time - lo->time);
    Pose p;
    p.rotation = geometry::slerp(lo->pose.rotation, hi->pose.rotation, u);
    p.position = geometry::lerp(lo->pose.position, hi->pose.position, u);
    out.push_back(p);
  }
  return out;
}

double width_from_tag_distance(double distance, const GripperRange& range) {
  if (!(range.tag_dist_max > range.tag_dist_min)) {
    throw PipelineError("gripper range calibration needs tag_dist_max > tag_dist_min");
  }
  const double u = (distance - range.tag_dist_min) / (range.tag_dist_max - range.tag_dist_min);
  const double w = range.width_min + u * (range.width_max - range.width_min);
  return std::clamp(w, std::min(range.width_min, range.width_max), std::max(range.width_min, range.width_max));
}

std::vector<double> gripper_widths(std::span<const TagDetection> detections, const GripperRange& range,
                                   std::span<const double> query_times) {
  if (!(range.tag_dist_max > range.tag_dist_min)) {
    throw PipelineError("gripper range calibration needs tag_dist_max > tag_dist_min");
  }
  if (detections.empty()) throw PipelineError("no gripper tag detections");
  const auto [qmin, qmax] = std::minmax_element(query_times.begin(), query_times.end());
  if (!query_times.empty() && (detections.back().time < *qmin || detections.front().time > *qmax)) {
    throw PipelineError("no gripper tag detections inside the valid time range");
  }
  std::vector<double> times, widths;
  for (const auto& d : detections) {
    if (!times.empty() && !(d.time > times.back())) throw PipelineError("tag detection times not increasing");
    times.push_back(d.time);
    widths.push_back(width_from_tag_distance(d.distance(), range));
  }
  std::vector<double> out;
  out.reserve(query_times.size());
  for (double q : query_times) {
    if (q <= times.front()) {
      out.push_back(widths.front());
    } else if (q >= times.back()) {
      out.push_back(widths.back());
    } else {
      const auto hi = static_cast<std::size_t>(std::lower_bound(times.begin(), times.end(), q) - times.begin());
      if (times[hi] == q) {
        out.push_back(widths[hi]);
      } else {
        const double u = (q - times[hi - 1]) / (times[hi] - times[hi - 1]);
        out.push_back(widths[hi - 1] + u * (widths[hi] - widths[hi - 1]));
      }
    }
  }
  return out;
}

EpisodeRecord process_episode(const RawEpisode& raw) {
  const auto sync = synchronize(raw);
  const auto& cal = raw.calibration;
  std::vector<TimedPose> track = raw.tracking;
  for (auto& s : track) s.time -= cal.tracking_latency;
  const auto cam_poses = interpolate_poses(track, sync.corrected_times);

  std::vector<TagDetection> dets = raw.detections;
  for (auto& d : dets) d.time -= cal.camera_latency;

  EpisodeRecord rec;
  rec.scene = raw.scene;
  rec.task = raw.task;
  rec.episode = raw.episode;
  rec.valid_indices = sync.valid_indices;
  rec.pose_interp.reserve(cam_poses.size());
  for (const auto& p : cam_poses) rec.pose_interp.push_back(camera_to_ee(p, cal.camera_to_ee));
  rec.gripper_widths = gripper_widths(dets, cal.gripper, sync.corrected_times);
  rec.frames = raw.frames;
  if (rec.frames.has(rec.valid_indices.front())) {
    const Raster first = rec.frames.get(rec.valid_indices.front());
    rec.image_width = first.width;
    rec.image_height = first.height;
  }
  return rec;
}

void write_raw_episode(const fs::path& dir, const RawEpisode& raw) {
  fs::create_directories(dir / "frames");
  const std::uint64_t nf = raw.frame_times.size(), nt = raw.tracking.size(), nd = raw.detections.size();
  write_array(dir / "frame_times.arr", "frame_times", std::vector<std::uint64_t>{nf},
              std::span<const double>(raw.frame_times));
  std::vector<double> ttimes, tposes;
  for (const auto& s : raw.tracking) {
    ttimes.push_back(s.time);
    const auto m = s.pose.to_row_major();
    tposes.insert(tposes.end(), m.begin(), m.end());
  }
  write_array(dir / "tracking_times.arr", "tracking_times", std::vector<std::uint64_t>{nt},
              std::span<const double>(ttimes));
  write_array(dir / "tracking_poses.arr", "tracking_poses", std::vector<std::uint64_t>{nt, 4, 4},
              std::span<const double>(tposes));
  std::vector<double> dtimes, dpts;
  for (const auto& d : raw.detections) {
    dtimes.push_back(d.time);
    dpts.insert(dpts.end(), {d.left.x(), d.left.y(), d.right.x(), d.right.y()});
  }
  write_array(dir / "tag_times.arr", "tag_times", std::vector<std::uint64_t>{nd}, std::span<const double>(dtimes));
  write_array(dir / "tag_points.arr", "tag_points", std::vector<std::uint64_t>{nd, 4}, std::span<const double>(dpts));

  const auto& cal = raw.calibration;
  KvConfig kv;
  std::ostringstream num;
  num.precision(17);
  auto put = [&](const std::string& k, double v) {
    num.str("");
    num << v;
    kv.set(k, num.str());
  };
  put("camera_latency", cal.camera_latency);
  put("tracking_latency", cal.tracking_latency);
  put("tag_dist_min", cal.gripper.tag_dist_min);
  put("tag_dist_max", cal.gripper.tag_dist_max);
  put("width_min", cal.gripper.width_min);
  put("width_max", cal.gripper.width_max);
  const auto ext = cal.camera_to_ee.to_row_major();
  kv.set("camera_to_ee", join_doubles(ext));
  kv.save(dir / "calibration.txt");

  for (std::int64_t i = 0; i < static_cast<std::int64_t>(nf); ++i) {
    if (raw.frames.has(i)) write_ppm(dir / "frames" / FrameStore::file_name(i), raw.frames.get(i));
  }
}

RawEpisode read_raw_episode(const fs::path& dir) {
  RawEpisode raw;
  raw.episode = dir.filename().string();
  raw.task = dir.parent_path().filename().string();
  raw.scene = dir.parent_path().parent_path().filename().string();
  for (const char* name : {"frame_times.arr", "tracking_times.arr", "tracking_poses.arr", "tag_times.arr",
                           "tag_points.arr", "calibration.txt"}) {
    if (!fs::exists(dir / name)) throw PipelineError(dir.string() + ": missing " + name);
  }
  raw.frame_times = read_array_f64(dir / "frame_times.arr").values;
  const auto tt = read_array_f64(dir / "tracking_times.arr").values;
  const auto tp = read_array_f64(dir / "tracking_poses.arr");
  if (tp.numel() != tt.size() * 16) throw PipelineError(dir.string() + ": tracking arrays disagree in length");
  for (std::size_t i = 0; i < tt.size(); ++i) {
    raw.tracking.push_back({tt[i], Pose::from_row_major(std::span<const double>(tp.values).subspan(i * 16, 16))});
  }
  const auto dt = read_array_f64(dir / "tag_times.arr").values;
  const auto dp = read_array_f64(dir / "tag_points.arr").values;
  if (dp.size() != dt.size() * 4) throw PipelineError(dir.string() + ": tag arrays disagree in length");
  for (std::size_t i = 0; i < dt.size(); ++i) {
    raw.detections.push_back(
        {dt[i], Eigen::Vector2d(dp[4 * i], dp[4 * i + 1]), Eigen::Vector2d(dp[4 * i + 2], dp[4 * i + 3])});
  }
  const auto kv = KvConfig::load(dir / "calibration.txt");
  auto& cal = raw.calibration;
  cal.camera_latency = kv.get_double("camera_latency", 0.0);
  cal.tracking_latency = kv.get_double("tracking_latency", 0.0);
  cal.gripper.tag_dist_min = kv.get_double("tag_dist_min", 0.0);
  cal.gripper.tag_dist_max = kv.get_double("tag_dist_max", 1.0);
  cal.gripper.width_min = kv.get_double("width_min", 0.0);
  cal.gripper.width_max = kv.get_double("width_max", 0.08);
  const auto ext = kv.get_doubles("camera_to_ee");
  cal.camera_to_ee = ext.empty() ? Pose::identity() : Pose::from_row_major(ext);
  raw.frames = FrameStore(dir / "frames");
  return raw;
}

std::vector<fs::path> find_raw_episodes(const fs::path& root) {
  std::vector<fs::path> out;
  if (!fs::exists(root)) return out;
  for (const auto& scene : fs::directory_iterator(root)) {
    if (!scene.is_directory()) continue;
    for (const auto& task : fs::directory_iterator(scene.path())) {
      if (!task.is_directory()) continue;
      for (const auto& ep : fs::directory_iterator(task.path())) {
        if (ep.is_directory() && fs::exists(ep.path() / "frame_times.arr")) out.push_back(ep.path());
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace spot::pipeline
