#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace spot::eval {

// Chunks are flat H x 10 arrays in denormalized units: [dp(3), rot6d(6), grip(1)] per waypoint.

// Mean over waypoints of the translation error norm (meters).
double pos_l2(std::span<const double> pred, std::span<const double> gt);
// Mean over waypoints of the L2 distance between raw 6D rotation codes.
double rot_l2(std::span<const double> pred, std::span<const double> gt);
// Mean over waypoints of the absolute gripper-width error.
double grip_l1(std::span<const double> pred, std::span<const double> gt);
// Translation error at the last waypoint.
double endpoint_error(std::span<const double> pred, std::span<const double> gt);

struct SampleScore {
  std::string scene;
  std::string task;
  std::string episode;
  int timestep = 0;
  std::int64_t frame_index = 0;
  bool is_final_chunk = false;
  double endpoint = 0;
  double pos_l2 = 0;
  double rot_l2 = 0;
  double grip_l1 = 0;

  std::string key() const { return scene + "/" + task + "/" + episode; }
};

SampleScore score_chunk(std::span<const double> pred, std::span<const double> gt);

struct MetricsReport {
  std::string scope;          // "all" or a scene id
  std::optional<double> fde;  // mean endpoint error over final-chunk samples; absent if there are none
  double fde_all = 0;         // mean endpoint error over every sample
  double pos_l2 = 0;
  double rot_l2 = 0;
  double grip_l1 = 0;
  std::size_t num_samples = 0;
  std::size_t num_final_samples = 0;
  std::uint64_t seed = 0;

  std::string to_json() const;
  static MetricsReport from_json(const std::string& text);
};

// Throws ContractError for an empty score list.
MetricsReport aggregate(const std::string& scope, std::span<const SampleScore> scores, std::uint64_t seed);

// "all" first, then one report per scene in sorted order.
std::vector<MetricsReport> aggregate_by_scope(std::span<const SampleScore> scores, std::uint64_t seed);

// Sample-count weighted combination of disjoint scopes (fde weighted by final-chunk count).
MetricsReport combine(const std::string& scope, std::span<const MetricsReport> parts);

}  // namespace spot::eval
