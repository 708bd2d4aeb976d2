#include "spot/dataset/split.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "spot/common/array_io.hpp"
#include "spot/common/error.hpp"
#include "spot/common/rng.hpp"

namespace spot::dataset {

using ordered_json = nlohmann::ordered_json;

namespace {

ordered_json refs_to_json(const std::vector<EpisodeRef>& refs) {
  ordered_json arr = ordered_json::array();
  for (const auto& r : refs) {
    arr.push_back({{"key", r.key}, {"scene", r.scene}, {"task", r.task}, {"path", r.path}});
  }
  return arr;
}

std::vector<EpisodeRef> refs_from_json(const ordered_json& arr) {
  std::vector<EpisodeRef> out;
  for (const auto& e : arr) {
    out.push_back({e.at("key").get<std::string>(), e.at("scene").get<std::string>(), e.at("task").get<std::string>(),
                   e.value("path", std::string())});
  }
  return out;
}

}  // namespace

std::string SplitManifest::to_json() const {
  ordered_json j;
  j["seed"] = seed;
  j["val_ratio"] = val_ratio;
  j["train"] = refs_to_json(train);
  j["val"] = refs_to_json(val);
  return j.dump(2) + "\n";
}

SplitManifest SplitManifest::from_json(const std::string& text) {
  try {
    const auto j = ordered_json::parse(text);
    SplitManifest m;
    m.seed = j.at("seed").get<std::uint64_t>();
    m.val_ratio = j.at("val_ratio").get<double>();
    m.train = refs_from_json(j.at("train"));
    m.val = refs_from_json(j.at("val"));
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("split manifest: ") + e.what());
  }
}

void SplitManifest::save(const std::filesystem::path& path) const { write_file_atomic(path, to_json()); }

SplitManifest SplitManifest::load(const std::filesystem::path& path) { return from_json(read_file_bytes(path)); }

SplitManifest make_split(std::vector<EpisodeRef> episodes, double val_ratio, std::uint64_t seed) {
  if (!(val_ratio > 0.0 && val_ratio < 1.0)) throw ConfigError("val_ratio must lie in (0, 1)");
  std::sort(episodes.begin(), episodes.end(), [](const EpisodeRef& a, const EpisodeRef& b) { return a.key < b.key; });
  for (std::size_t i = 1; i < episodes.size(); ++i) {
    if (episodes[i].key == episodes[i - 1].key) throw ConfigError("duplicate episode key " + episodes[i].key);
  }
  std::map<std::string, std::map<std::string, std::vector<const EpisodeRef*>>> by_scene;
  for (const auto& e : episodes) by_scene[e.scene][e.task].push_back(&e);

  std::set<std::pair<std::string, std::string>> val_tasks;
  for (const auto& [scene, tasks] : by_scene) {
    std::vector<std::string> names;
    std::size_t total = 0;
    for (const auto& [task, eps] : tasks) {
      names.push_back(task);
      total += eps.size();
    }
    Rng rng(combine_seed({seed, hash_string(scene)}));
    for (std::size_t i = names.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(rng() % i);
      std::swap(names[i - 1], names[j]);
    }
    std::size_t chosen = 0;
    for (const auto& task : names) {
      if (static_cast<double>(chosen) / static_cast<double>(total) >= val_ratio) break;
      val_tasks.insert({scene, task});
      chosen += tasks.at(task).size();
    }
  }

  SplitManifest m;
  m.seed = seed;
  m.val_ratio = val_ratio;
  for (const auto& e : episodes) (val_tasks.count({e.scene, e.task}) ? m.val : m.train).push_back(e);
  verify_split(m);
  return m;
}

void verify_split(const SplitManifest& m) {
  std::set<std::string> train_keys;
  std::set<std::pair<std::string, std::string>> train_tasks;
  for (const auto& e : m.train) {
    train_keys.insert(e.key);
    train_tasks.insert({e.scene, e.task});
  }
  for (const auto& e : m.val) {
    if (train_keys.count(e.key)) throw InternalError("episode " + e.key + " appears in both splits");
    if (train_tasks.count({e.scene, e.task})) {
      throw InternalError("task " + e.scene + "/" + e.task + " appears in both splits");
    }
  }
}

double split_tv_distance(const SplitManifest& m) {
  std::map<std::string, double> pt, pv;
  for (const auto& e : m.train) pt[e.scene] += 1.0;
  for (const auto& e : m.val) pv[e.scene] += 1.0;
  const double nt = static_cast<double>(m.train.size()), nv = static_cast<double>(m.val.size());
  std::set<std::string> scenes;
  for (const auto& [s, c] : pt) scenes.insert(s);
  for (const auto& [s, c] : pv) scenes.insert(s);
  double tv = 0.0;
  for (const auto& s : scenes) {
    const double a = nt > 0 ? pt[s] / nt : 0.0;
    const double b = nv > 0 ? pv[s] / nv : 0.0;
    tv += std::abs(a - b);
  }
  return 0.5 * tv;
}

}  // namespace spot::dataset
