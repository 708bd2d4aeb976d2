#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <vector>

#include "spot/common/kv_config.hpp"
#include "spot/dataset/samples.hpp"

namespace spot::dataset {

inline constexpr double kMinStd = 1e-4;

struct NormStats {
  std::array<double, 10> mean{};
  std::array<double, 10> std{};

  // Applied per waypoint; `x` length must be a multiple of 10.
  std::vector<double> normalize(std::span<const double> x) const;
  std::vector<double> denormalize(std::span<const double> x) const;

  KvConfig to_kv() const;
  // Throws ConfigError.
  static NormStats from_kv(const KvConfig& kv);
  void save(const std::filesystem::path& path) const;
  static NormStats load(const std::filesystem::path& path);
};

// Population mean/std over every future waypoint, std clamped at kMinStd.
NormStats compute_norm_stats(std::span<const Sample> samples);
NormStats compute_norm_stats(std::span<const std::vector<double>> chunks);

}  // namespace spot::dataset
