#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "spot/dataset/samples.hpp"
#include "spot/eval/evaluate.hpp"
#include "support/episodes.hpp"

namespace spot::testing {

inline std::vector<double> random_chunk(std::mt19937_64& rng, std::size_t h) {
  std::normal_distribution<double> n(0.0, 0.1);
  std::vector<double> c(h * 10);
  for (auto& v : c) v = n(rng);
  return c;
}

// Independent reimplementation: explicit per-waypoint loops over named components.
struct BruteForce {
  double pos = 0, rot = 0, grip = 0, end = 0;
};
inline BruteForce brute(const std::vector<double>& p, const std::vector<double>& g) {
  BruteForce b;
  const std::size_t h = p.size() / 10;
  for (std::size_t w = 0; w < h; ++w) {
    const double dx = p[w * 10] - g[w * 10], dy = p[w * 10 + 1] - g[w * 10 + 1], dz = p[w * 10 + 2] - g[w * 10 + 2];
    b.pos += std::hypot(dx, dy, dz) / static_cast<double>(h);
    double r = 0;
    for (std::size_t k = 3; k < 9; ++k) r += std::pow(p[w * 10 + k] - g[w * 10 + k], 2);
    b.rot += std::sqrt(r) / static_cast<double>(h);
    b.grip += std::fabs(p[w * 10 + 9] - g[w * 10 + 9]) / static_cast<double>(h);
    if (w + 1 == h) b.end = std::hypot(dx, dy, dz);
  }
  return b;
}

inline std::vector<dataset::Sample> samples_for_scenes(std::mt19937_64& rng) {
  std::vector<dataset::Sample> out;
  int e = 0;
  for (const char* scene : {"scene1", "scene2", "scene3"}) {
    for (int k = 0; k < 2; ++k) {
      const auto rec = random_episode(rng, 40 + 9 * e, scene, "task" + std::to_string(k),
                                                     "ep00" + std::to_string(e));
      ++e;
      auto s = dataset::build_samples(rec, dataset::SampleConfig{2, 4, 3, true});
      out.insert(out.end(), s.begin(), s.end());
    }
  }
  return out;
}

inline eval::PredictorFactory noisy_predictor(double sigma) {
  return [sigma] {
    return eval::ChunkPredictor([sigma](const dataset::Sample& s) {
      std::mt19937_64 rng(static_cast<std::uint64_t>(s.timestep) * 7919 + s.episode.size());
      std::normal_distribution<double> n(0.0, sigma);
      auto out = s.future_actions;
      for (auto& v : out) v += n(rng);
      return out;
    });
  };
}

}  // namespace spot::testing
