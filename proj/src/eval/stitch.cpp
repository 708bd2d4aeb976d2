#include "spot/eval/stitch.hpp"

#include <cstdio>
#include <sstream>

#include "spot/common/array_io.hpp"
#include "spot/common/error.hpp"
#include "spot/eval/plot.hpp"

namespace spot::eval {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string file_stem(const std::string& key) {
  std::string s = key;
  for (std::size_t p = s.find('/'); p != std::string::npos; p = s.find('/', p + 2)) s.replace(p, 1, "__");
  return s;
}

}  // namespace

StitchResult stitch_episode(const pipeline::EpisodeRecord& record, const dataset::SampleConfig& config,
                            const ChunkPredictor& predict) {
  const auto samples = dataset::build_samples(record, config);
  if (samples.empty()) throw ContractError("stitch: episode " + record.key() + " is too short for any sample");
  const auto track = dataset::subsample(record, config.stride);
  const int K = config.history, H = config.horizon;
  const int V = static_cast<int>(track.poses.size());
  const int last = V - 1 - H;

  StitchResult r;
  r.key = record.key();
  for (int t = K; t <= last; t += H) r.anchors.push_back(t);
  if (r.anchors.back() + H < V - 1) r.anchors.push_back(last);

  std::vector<geometry::Chunk> chunks;
  std::vector<geometry::Pose> anchor_poses;
  for (int a : r.anchors) {
    const auto& s = samples[static_cast<std::size_t>(a - K)];
    const auto flat = predict(s);
    if (flat.size() != s.future_actions.size()) {
      throw DimensionError("stitch: predictor returned " + std::to_string(flat.size()) + " values");
    }
    geometry::Chunk c;
    for (std::size_t i = 0; i < flat.size(); i += 10) {
      c.push_back(geometry::Waypoint10::from_array(std::span<const double>(flat).subspan(i, 10)));
    }
    chunks.push_back(std::move(c));
    anchor_poses.push_back(s.anchor);
  }
  const auto world = geometry::stitch(chunks, anchor_poses);

  r.points.resize(static_cast<std::size_t>(V));
  for (int j = 0; j < V; ++j) {
    auto& p = r.points[static_cast<std::size_t>(j)];
    p.step = j;
    p.frame_index = track.frame_indices[static_cast<std::size_t>(j)];
    p.true_position = track.poses[static_cast<std::size_t>(j)].position;
    p.predicted_position = p.true_position;
  }
  int covered = K;
  for (std::size_t c = 0; c < r.anchors.size(); ++c) {
    const int a = r.anchors[c];
    for (int h = 1; h <= H; ++h) {
      const int j = a + h;
      if (j <= covered) continue;
      auto& p = r.points[static_cast<std::size_t>(j)];
      p.anchor_step = a;
      p.predicted = true;
      p.predicted_position = world[c * static_cast<std::size_t>(H) + static_cast<std::size_t>(h - 1)].position;
      p.error = (p.predicted_position - p.true_position).norm();
    }
    covered = a + H;
  }
  r.final_error = r.points.back().error;
  return r;
}

std::string stitch_csv(const StitchResult& r) {
  std::ostringstream csv;
  csv << "step,frame_index,anchor_step,predicted,pred_x,pred_y,pred_z,gt_x,gt_y,gt_z,error\n";
  for (const auto& p : r.points) {
    csv << p.step << ',' << p.frame_index << ',' << p.anchor_step << ',' << (p.predicted ? 1 : 0);
    for (int i = 0; i < 3; ++i) csv << ',' << num(p.predicted_position[i]);
    for (int i = 0; i < 3; ++i) csv << ',' << num(p.true_position[i]);
    csv << ',' << num(p.error) << '\n';
  }
  return csv.str();
}

std::string stitch_svg(const StitchResult& r) {
  Series s{"position error", {}, {}};
  for (const auto& p : r.points) {
    s.x.push_back(p.step);
    s.y.push_back(p.error);
  }
  ChartOptions o;
  o.title = r.key + " stitched position error";
  o.x_label = "subsampled step";
  o.y_label = "world position error (m)";
  return line_chart_svg({s}, o);
}

void write_stitch_outputs(const std::filesystem::path& out_dir, const StitchResult& r) {
  std::filesystem::create_directories(out_dir);
  const auto stem = file_stem(r.key);
  write_file_atomic(out_dir / (stem + ".csv"), stitch_csv(r));
  write_file_atomic(out_dir / (stem + ".svg"), stitch_svg(r));
}

}  // namespace spot::eval
