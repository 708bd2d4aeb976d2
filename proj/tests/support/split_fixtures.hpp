#pragma once

#include <string>
#include <vector>

#include "spot/common/rng.hpp"
#include "spot/dataset/split.hpp"

namespace spot::testing {

inline std::vector<dataset::EpisodeRef> random_split_fixture(Rng& rng, int scenes, int max_tasks, int max_eps) {
  std::vector<dataset::EpisodeRef> out;
  for (int s = 0; s < scenes; ++s) {
    const int tasks = 1 + static_cast<int>(rng() % max_tasks);
    for (int t = 0; t < tasks; ++t) {
      const int eps = 1 + static_cast<int>(rng() % max_eps);
      for (int e = 0; e < eps; ++e) {
        const std::string scene = "scene" + std::to_string(s + 1), task = "task" + std::to_string(t);
        const std::string ep = "ep" + std::to_string(e);
        out.push_back({scene + "/" + task + "/" + ep, scene, task, scene + "/" + task + "/x/" + ep});
      }
    }
  }
  return out;
}

}  // namespace spot::testing
