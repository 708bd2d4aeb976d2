#include "spot/dataset/catalog.hpp"

#include <algorithm>
#include <map>

#include "spot/common/error.hpp"

namespace spot::dataset {

namespace fs = std::filesystem;

const pipeline::EpisodeRecord* Catalog::find(const std::string& key) const {
  auto it = std::lower_bound(episodes.begin(), episodes.end(), key,
                             [](const pipeline::EpisodeRecord& r, const std::string& k) { return r.key() < k; });
  return it != episodes.end() && it->key() == key ? &*it : nullptr;
}

std::vector<EpisodeRef> Catalog::refs() const {
  std::vector<EpisodeRef> out;
  for (const auto& r : episodes) {
    out.push_back({r.key(), r.scene, r.task,
                   fs::relative(pipeline::processed_dir(root, r.scene, r.task, r.episode), root).generic_string()});
  }
  return out;
}

Catalog load_catalog(const fs::path& root, const fs::path& annotations, const SampleConfig& config) {
  if (!fs::exists(annotations)) throw IoError("annotation file not found: " + annotations.string());
  Catalog cat;
  cat.root = root;
  std::map<std::string, fs::path> dirs;
  for (const auto& d : pipeline::find_processed_episodes(root)) {
    // <scene>/<task>/recording_output_processed/<episode>
    const auto task_dir = d.parent_path().parent_path();
    const EpisodeKey key{task_dir.parent_path().filename().string(), task_dir.filename().string(),
                         d.filename().string()};
    dirs[key.str()] = d;
  }
  auto ann = load_annotations(annotations);
  cat.skipped = ann.skipped;
  const int min_frames = (config.history + config.horizon) * config.stride + 1;
  for (const auto& [key, a] : ann.records) {
    auto it = dirs.find(key);
    if (it == dirs.end()) {
      cat.skipped.push_back({key, "no processed episode directory"});
      continue;
    }
    pipeline::EpisodeRecord rec;
    try {
      rec = pipeline::read_processed(it->second);
    } catch (const Error& e) {
      cat.skipped.push_back({key, e.what()});
      continue;
    }
    rec.prompt_object = a.object;
    rec.prompt_target = a.target;
    auto report = pipeline::validate_episode(rec, config.history, config.horizon);
    const int V = static_cast<int>(subsample_positions(rec.valid_indices.size(), config.stride).size());
    if (report.ok && sample_count(V, config.history, config.horizon) == 0) {
      report.fail("too short after subsampling: " + std::to_string(rec.valid_indices.size()) + " valid frames, need " +
                  std::to_string(min_frames));
    }
    if (!report.ok) {
      std::string why;
      for (const auto& r : report.reasons) why += (why.empty() ? "" : "; ") + r;
      cat.skipped.push_back({key, why});
      continue;
    }
    cat.episodes.push_back(std::move(rec));
  }
  for (const auto& [key, dir] : dirs) {
    if (!ann.records.count(key)) cat.skipped.push_back({key, "missing prompt annotation"});
  }
  std::sort(cat.episodes.begin(), cat.episodes.end(),
            [](const pipeline::EpisodeRecord& a, const pipeline::EpisodeRecord& b) { return a.key() < b.key(); });
  return cat;
}

std::vector<Sample> samples_for(const Catalog& catalog, const std::vector<EpisodeRef>& split,
                                const SampleConfig& config) {
  std::vector<Sample> out;
  for (const auto& ref : split) {
    const auto* rec = catalog.find(ref.key);
    if (!rec) throw PipelineError("split references unknown episode " + ref.key);
    auto s = build_samples(*rec, config);
    std::move(s.begin(), s.end(), std::back_inserter(out));
  }
  return out;
}

}  // namespace spot::dataset
