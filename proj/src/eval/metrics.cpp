#include "spot/eval/metrics.hpp"

#include <json.hpp>

#include <cmath>
#include <map>

#include "spot/common/error.hpp"

namespace spot::eval {

using ordered_json = nlohmann::ordered_json;

namespace {

constexpr std::size_t kDim = 10;

std::size_t waypoints(std::span<const double> pred, std::span<const double> gt) {
  if (pred.size() != gt.size()) {
    throw DimensionError("metric: prediction has " + std::to_string(pred.size()) + " values, ground truth " +
                         std::to_string(gt.size()));
  }
  if (pred.empty() || pred.size() % kDim != 0) {
    throw DimensionError("metric: chunk size " + std::to_string(pred.size()) + " is not a positive multiple of 10");
  }
  return pred.size() / kDim;
}

double block_norm(const double* a, const double* b, std::size_t n) {
  double s = 0;
  for (std::size_t i = 0; i < n; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

template <typename F>
double mean_over_waypoints(std::span<const double> pred, std::span<const double> gt, F per_waypoint) {
  const std::size_t h = waypoints(pred, gt);
  double sum = 0;
  for (std::size_t i = 0; i < h; ++i) sum += per_waypoint(pred.data() + i * kDim, gt.data() + i * kDim);
  return sum / static_cast<double>(h);
}

}  // namespace

double pos_l2(std::span<const double> pred, std::span<const double> gt) {
  return mean_over_waypoints(pred, gt, [](const double* p, const double* g) { return block_norm(p, g, 3); });
}

double rot_l2(std::span<const double> pred, std::span<const double> gt) {
  return mean_over_waypoints(pred, gt, [](const double* p, const double* g) { return block_norm(p + 3, g + 3, 6); });
}

double grip_l1(std::span<const double> pred, std::span<const double> gt) {
  return mean_over_waypoints(pred, gt, [](const double* p, const double* g) { return std::abs(p[9] - g[9]); });
}

double endpoint_error(std::span<const double> pred, std::span<const double> gt) {
  const std::size_t h = waypoints(pred, gt);
  const std::size_t off = (h - 1) * kDim;
  return block_norm(pred.data() + off, gt.data() + off, 3);
}

SampleScore score_chunk(std::span<const double> pred, std::span<const double> gt) {
  SampleScore s;
  s.endpoint = endpoint_error(pred, gt);
  s.pos_l2 = pos_l2(pred, gt);
  s.rot_l2 = rot_l2(pred, gt);
  s.grip_l1 = grip_l1(pred, gt);
  return s;
}

std::string MetricsReport::to_json() const {
  ordered_json j;
  j["scope"] = scope;
  j["fde"] = fde ? ordered_json(*fde) : ordered_json(nullptr);
  j["fde_all"] = fde_all;
  j["pos_l2"] = pos_l2;
  j["rot_l2"] = rot_l2;
  j["grip_l1"] = grip_l1;
  j["num_samples"] = num_samples;
  j["num_final_samples"] = num_final_samples;
  j["fde_averaging"] = "per final-chunk sample";
  j["fde_all_averaging"] = "per sample, last waypoint of every chunk";
  j["seed"] = seed;
  return j.dump(2) + "\n";
}

MetricsReport MetricsReport::from_json(const std::string& text) {
  try {
    const auto j = ordered_json::parse(text);
    MetricsReport r;
    r.scope = j.at("scope").get<std::string>();
    if (!j.at("fde").is_null()) r.fde = j.at("fde").get<double>();
    r.fde_all = j.at("fde_all").get<double>();
    r.pos_l2 = j.at("pos_l2").get<double>();
    r.rot_l2 = j.at("rot_l2").get<double>();
    r.grip_l1 = j.at("grip_l1").get<double>();
    r.num_samples = j.at("num_samples").get<std::size_t>();
    r.num_final_samples = j.value("num_final_samples", std::size_t{0});
    r.seed = j.at("seed").get<std::uint64_t>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("metrics summary: ") + e.what());
  }
}

MetricsReport aggregate(const std::string& scope, std::span<const SampleScore> scores, std::uint64_t seed) {
  if (scores.empty()) throw ContractError("aggregate: no samples in scope '" + scope + "'");
  MetricsReport r;
  r.scope = scope;
  r.seed = seed;
  double final_sum = 0;
  for (const auto& s : scores) {
    r.fde_all += s.endpoint;
    r.pos_l2 += s.pos_l2;
    r.rot_l2 += s.rot_l2;
    r.grip_l1 += s.grip_l1;
    if (s.is_final_chunk) {
      final_sum += s.endpoint;
      ++r.num_final_samples;
    }
  }
  r.num_samples = scores.size();
  const double n = static_cast<double>(r.num_samples);
  r.fde_all /= n;
  r.pos_l2 /= n;
  r.rot_l2 /= n;
  r.grip_l1 /= n;
  if (r.num_final_samples) r.fde = final_sum / static_cast<double>(r.num_final_samples);
  return r;
}

std::vector<MetricsReport> aggregate_by_scope(std::span<const SampleScore> scores, std::uint64_t seed) {
  std::vector<MetricsReport> out{aggregate("all", scores, seed)};
  std::map<std::string, std::vector<SampleScore>> by_scene;
  for (const auto& s : scores) {
    if (s.scene == "all") throw ContractError("aggregate_by_scope: scene id 'all' collides with the overall scope");
    by_scene[s.scene].push_back(s);
  }
  for (const auto& [scene, list] : by_scene) out.push_back(aggregate(scene, list, seed));
  return out;
}

MetricsReport combine(const std::string& scope, std::span<const MetricsReport> parts) {
  if (parts.empty()) throw ContractError("combine: no parts");
  MetricsReport r;
  r.scope = scope;
  r.seed = parts.front().seed;
  double final_sum = 0;
  for (const auto& p : parts) {
    const double w = static_cast<double>(p.num_samples);
    r.fde_all += w * p.fde_all;
    r.pos_l2 += w * p.pos_l2;
    r.rot_l2 += w * p.rot_l2;
    r.grip_l1 += w * p.grip_l1;
    r.num_samples += p.num_samples;
    if (p.fde) final_sum += static_cast<double>(p.num_final_samples) * *p.fde;
    r.num_final_samples += p.num_final_samples;
  }
  const double n = static_cast<double>(r.num_samples);
  r.fde_all /= n;
  r.pos_l2 /= n;
  r.rot_l2 /= n;
  r.grip_l1 /= n;
  if (r.num_final_samples) r.fde = final_sum / static_cast<double>(r.num_final_samples);
  return r;
}

}  // namespace spot::eval
