#include "spot/dataset/samples.hpp"

#include <algorithm>

#include "spot/common/error.hpp"

namespace spot::dataset {

using geometry::Pose;

PromptVariant parse_variant(const std::string& name) {
  if (name == "none") return PromptVariant::kNone;
  if (name == "point") return PromptVariant::kPoint;
  if (name == "bbox") return PromptVariant::kBbox;
  if (name == "vision_bbox") return PromptVariant::kVisionBbox;
  if (name == "vision_bbox_and_bbox") return PromptVariant::kVisionBboxAndBbox;
  throw ConfigError("unknown prompt variant '" + name +
                    "' (expected none, point, bbox, vision_bbox, vision_bbox_and_bbox)");
}

std::string variant_name(PromptVariant v) {
  switch (v) {
    case PromptVariant::kNone: return "none";
    case PromptVariant::kPoint: return "point";
    case PromptVariant::kBbox: return "bbox";
    case PromptVariant::kVisionBbox: return "vision_bbox";
    case PromptVariant::kVisionBboxAndBbox: return "vision_bbox_and_bbox";
  }
  throw InternalError("bad prompt variant");
}

Raster render_prompt_boxes(const Raster& frame, const Box& object, const Box& target) {
  Raster out = frame;
  draw_box_outline(out, object.x_min, object.y_min, object.x_max, object.y_max, kObjectOutline, kOutlineThickness);
  draw_box_outline(out, target.x_min, target.y_min, target.x_max, target.y_max, kTargetOutline, kOutlineThickness);
  return out;
}

PromptPayload prompt_payload(PromptVariant variant, const Box& object, const Box& target, int width, int height,
                             const std::shared_ptr<const Raster>& first_frame) {
  if (width <= 0 || height <= 0) throw ContractError("prompt_payload: image size must be positive");
  const double w = width, h = height;
  auto norm_box = [&](const Box& b) {
    return std::array<double, 4>{std::clamp(b.x_min / w, 0.0, 1.0), std::clamp(b.y_min / h, 0.0, 1.0),
                                 std::clamp(b.x_max / w, 0.0, 1.0), std::clamp(b.y_max / h, 0.0, 1.0)};
  };
  auto center = [&](const Box& b) {
    return std::array<double, 2>{std::clamp(0.5 * (b.x_min + b.x_max) / w, 0.0, 1.0),
                                 std::clamp(0.5 * (b.y_min + b.y_max) / h, 0.0, 1.0)};
  };
  PromptPayload p;
  p.variant = variant;
  if (uses_box_coords(variant)) {
    p.object_box = norm_box(object);
    p.target_box = norm_box(target);
  }
  if (uses_point_coords(variant)) {
    p.object_point = center(object);
    p.target_point = center(target);
  }
  if (uses_rendered_frame(variant)) {
    if (!first_frame) throw ContractError("prompt_payload: vision variants need the first frame");
    p.rendered_frame = std::make_shared<const Raster>(render_prompt_boxes(*first_frame, object, target));
  }
  return p;
}

std::vector<std::size_t> subsample_positions(std::size_t valid_count, int stride) {
  if (stride < 1) throw ConfigError("stride must be >= 1");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < valid_count; i += static_cast<std::size_t>(stride)) out.push_back(i);
  return out;
}

SubsampledTrack subsample(const pipeline::EpisodeRecord& record, int stride) {
  const auto n = record.valid_indices.size();
  if (record.pose_interp.size() != n || record.gripper_widths.size() != n) {
    throw PipelineError(record.key() + ": pose/width/index arrays differ in length");
  }
  SubsampledTrack t;
  for (auto i : subsample_positions(n, stride)) {
    t.frame_indices.push_back(record.valid_indices[i]);
    t.poses.push_back(record.pose_interp[i]);
    t.widths.push_back(record.gripper_widths[i]);
  }
  return t;
}

std::vector<Sample> build_samples(const pipeline::EpisodeRecord& record, const SampleConfig& config) {
  const int K = config.history, H = config.horizon;
  if (K < 0 || H < 1) throw ConfigError("history must be >= 0 and horizon >= 1");
  const auto track = subsample(record, config.stride);
  const int V = static_cast<int>(track.poses.size());
  std::vector<Sample> out;
  if (sample_count(V, K, H) == 0) return out;

  std::shared_ptr<const Raster> first;
  if (config.load_frames && record.frames.has(record.valid_indices.front())) {
    first = std::make_shared<const Raster>(record.frames.get(record.valid_indices.front()));
  }
  const int last = V - 1 - H;
  for (int t = K; t <= last; ++t) {
    Sample s;
    s.scene = record.scene;
    s.task = record.task;
    s.episode = record.episode;
    s.timestep = t;
    s.frame_index = track.frame_indices[t];
    s.image_width = record.image_width;
    s.image_height = record.image_height;
    s.anchor = track.poses[t];
    s.first_frame = first;
    if (config.load_frames && record.frames.has(s.frame_index)) {
      s.current_frame = std::make_shared<const Raster>(record.frames.get(s.frame_index));
    }
    s.object_box = record.prompt_object;
    s.target_box = record.prompt_target;
    const Pose& anchor = track.poses[t];
    s.action_history.reserve(static_cast<std::size_t>(K) * 10);
    for (int k = 0; k < K; ++k) {
      const int j = t - K + k;
      const auto w = geometry::waypoint_encode(geometry::relative_pose(anchor, track.poses[j]), track.widths[j]);
      const auto a = w.to_array();
      s.action_history.insert(s.action_history.end(), a.begin(), a.end());
    }
    s.future_actions.reserve(static_cast<std::size_t>(H) * 10);
    for (int h = 1; h <= H; ++h) {
      const int j = t + h;
      const auto w = geometry::waypoint_encode(geometry::relative_pose(anchor, track.poses[j]), track.widths[j]);
      const auto a = w.to_array();
      s.future_actions.insert(s.future_actions.end(), a.begin(), a.end());
    }
    s.is_final_chunk = t == last;
    out.push_back(std::move(s));
  }
  return out;
}

geometry::Chunk future_chunk(const Sample& s) {
  geometry::Chunk c;
  for (std::size_t i = 0; i + 10 <= s.future_actions.size(); i += 10) {
    c.push_back(geometry::Waypoint10::from_array(std::span<const double>(s.future_actions).subspan(i, 10)));
  }
  return c;
}

}  // namespace spot::dataset
