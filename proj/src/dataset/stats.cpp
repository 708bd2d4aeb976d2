#include "spot/dataset/stats.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "spot/common/array_io.hpp"
#include "spot/common/error.hpp"

namespace spot::dataset {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(10);
  s << v;
  return s.str();
}

double final_displacement(const Sample& s) {
  const auto n = s.future_actions.size();
  const double* p = s.future_actions.data() + (n - 10);
  return std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
}

struct Counts {
  std::size_t episodes = 0;
  std::size_t samples = 0;
};

void write_outliers(const fs::path& path, std::vector<const Sample*> samples, int rows) {
  std::stable_sort(samples.begin(), samples.end(), [](const Sample* a, const Sample* b) {
    return final_displacement(*a) > final_displacement(*b);
  });
  std::ostringstream csv;
  csv << "rank,key,timestep,frame_index,final_displacement\n";
  for (int i = 0; i < rows && i < static_cast<int>(samples.size()); ++i) {
    const auto& s = *samples[i];
    csv << i + 1 << ',' << s.key() << ',' << s.timestep << ',' << s.frame_index << ','
        << fmt(final_displacement(s)) << '\n';
  }
  write_file_atomic(path, csv.str());
}

}  // namespace

void write_dataset_stats(const fs::path& out_dir, const Catalog& catalog, const SplitManifest& manifest,
                         const SampleConfig& config, int outlier_rows) {
  fs::create_directories(out_dir);
  SampleConfig cfg = config;
  cfg.load_frames = false;

  std::map<std::string, std::string> split_of;
  for (const auto& e : manifest.train) split_of[e.key] = "train";
  for (const auto& e : manifest.val) split_of[e.key] = "val";

  std::vector<Sample> all;
  std::map<std::string, std::pair<std::size_t, std::size_t>> per_episode;  // key -> (steps, samples)
  for (const auto& rec : catalog.episodes) {
    auto s = build_samples(rec, cfg);
    per_episode[rec.key()] = {subsample_positions(rec.valid_indices.size(), cfg.stride).size(), s.size()};
    std::move(s.begin(), s.end(), std::back_inserter(all));
  }

  std::ostringstream ep_csv;
  ep_csv << "key,scene,task,episode,split,valid_frames,steps,samples,image_width,image_height\n";
  std::map<std::string, Counts> scene_counts, task_counts, scene_task_counts;
  std::map<std::string, Counts> split_counts;
  double steps_sum = 0.0;
  for (const auto& rec : catalog.episodes) {
    const auto key = rec.key();
    const auto [steps, n] = per_episode[key];
    const auto split = split_of.count(key) ? split_of[key] : "unassigned";
    ep_csv << key << ',' << rec.scene << ',' << rec.task << ',' << rec.episode << ',' << split << ','
           << rec.valid_indices.size() << ',' << steps << ',' << n << ',' << rec.image_width << ','
           << rec.image_height << '\n';
    for (auto* c : {&scene_counts[rec.scene], &task_counts[rec.task], &scene_task_counts[rec.scene + "/" + rec.task],
                    &split_counts[split]}) {
      c->episodes += 1;
      c->samples += n;
    }
    steps_sum += static_cast<double>(steps);
  }
  write_file_atomic(out_dir / "episode_stats.csv", ep_csv.str());

  std::ostringstream count_csv;
  count_csv << "level,name,episodes,samples\n";
  for (const auto& [level, m] : std::vector<std::pair<std::string, const std::map<std::string, Counts>*>>{
           {"scene", &scene_counts}, {"task", &task_counts}, {"scene_task", &scene_task_counts}}) {
    for (const auto& [name, c] : *m) count_csv << level << ',' << name << ',' << c.episodes << ',' << c.samples << '\n';
  }
  write_file_atomic(out_dir / "count_stats.csv", count_csv.str());

  std::ostringstream prompt_csv, image_csv;
  prompt_csv << "key,role,x_min,y_min,x_max,y_max,width_frac,height_frac,area_frac,center_x,center_y\n";
  image_csv << "key,mean_r,mean_g,mean_b,std_r,std_g,std_b\n";
  for (const auto& rec : catalog.episodes) {
    const double w = rec.image_width, h = rec.image_height;
    for (const auto& [role, box] : {std::pair{"object", rec.prompt_object}, std::pair{"target", rec.prompt_target}}) {
      if (!box) continue;
      const auto& b = *box;
      prompt_csv << rec.key() << ',' << role << ',' << fmt(b.x_min) << ',' << fmt(b.y_min) << ',' << fmt(b.x_max)
                 << ',' << fmt(b.y_max) << ',' << fmt((b.x_max - b.x_min) / w) << ',' << fmt((b.y_max - b.y_min) / h)
                 << ',' << fmt((b.x_max - b.x_min) * (b.y_max - b.y_min) / (w * h)) << ','
                 << fmt(0.5 * (b.x_min + b.x_max) / w) << ',' << fmt(0.5 * (b.y_min + b.y_max) / h) << '\n';
    }
    const Raster first = rec.frames.get(rec.valid_indices.front());
    double sum[3] = {0, 0, 0}, sq[3] = {0, 0, 0};
    const double px = static_cast<double>(first.width) * first.height;
    for (std::size_t i = 0; i < first.rgb.size(); ++i) sum[i % 3] += first.rgb[i] / 255.0;
    for (std::size_t i = 0; i < first.rgb.size(); ++i) {
      const double e = first.rgb[i] / 255.0 - sum[i % 3] / px;
      sq[i % 3] += e * e;
    }
    image_csv << rec.key();
    for (int c = 0; c < 3; ++c) image_csv << ',' << fmt(sum[c] / px);
    for (int c = 0; c < 3; ++c) image_csv << ',' << fmt(std::sqrt(sq[c] / px));
    image_csv << '\n';
  }
  write_file_atomic(out_dir / "prompt_stats.csv", prompt_csv.str());
  write_file_atomic(out_dir / "image_stats.csv", image_csv.str());

  std::vector<const Sample*> train, val;
  double trans_sum = 0.0, final_sum = 0.0, grip_sum = 0.0;
  std::size_t waypoints = 0;
  for (const auto& s : all) {
    const auto split = split_of.count(s.key()) ? split_of[s.key()] : "";
    if (split == "train") train.push_back(&s);
    if (split == "val") val.push_back(&s);
    for (std::size_t i = 0; i < s.future_actions.size(); i += 10) {
      const double* p = s.future_actions.data() + i;
      trans_sum += std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
      grip_sum += p[9];
      ++waypoints;
    }
    final_sum += final_displacement(s);
  }
  write_outliers(out_dir / "outliers_train.csv", train, outlier_rows);
  write_outliers(out_dir / "outliers_val.csv", val, outlier_rows);

  const double ne = std::max<double>(1.0, static_cast<double>(catalog.episodes.size()));
  const double ns = std::max<double>(1.0, static_cast<double>(all.size()));
  const double nw = std::max<double>(1.0, static_cast<double>(waypoints));
  ordered_json j;
  j["history"] = cfg.history;
  j["horizon"] = cfg.horizon;
  j["stride"] = cfg.stride;
  j["seed"] = manifest.seed;
  j["val_ratio"] = manifest.val_ratio;
  j["num_episodes"] = catalog.episodes.size();
  j["num_samples"] = all.size();
  j["train_episodes"] = split_counts["train"].episodes;
  j["train_samples"] = split_counts["train"].samples;
  j["val_episodes"] = split_counts["val"].episodes;
  j["val_samples"] = split_counts["val"].samples;
  j["skipped_episodes"] = catalog.skipped.size();
  j["mean_episode_steps"] = steps_sum / ne;
  j["mean_samples_per_episode"] = static_cast<double>(all.size()) / ne;
  j["mean_relative_translation"] = trans_sum / nw;
  j["mean_final_displacement"] = final_sum / ns;
  j["mean_gripper_width"] = grip_sum / nw;
  j["split_tv_distance"] = split_tv_distance(manifest);
  ordered_json scenes = ordered_json::object();
  for (const auto& [scene, c] : scene_counts) scenes[scene] = {{"episodes", c.episodes}, {"samples", c.samples}};
  j["scenes"] = scenes;
  write_file_atomic(out_dir / "summary.json", j.dump(2) + "\n");
}

}  // namespace spot::dataset
