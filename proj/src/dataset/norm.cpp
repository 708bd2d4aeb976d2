#include "spot/dataset/norm.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "spot/common/error.hpp"
#include "spot/common/kv_config.hpp"

namespace spot::dataset {

namespace {

void check_width(std::size_t n) {
  if (n % 10 != 0) throw DimensionError("normalization expects a multiple of 10 values, got " + std::to_string(n));
}

}  // namespace

std::vector<double> NormStats::normalize(std::span<const double> x) const {
  check_width(x.size());
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - mean[i % 10]) / std[i % 10];
  return out;
}

std::vector<double> NormStats::denormalize(std::span<const double> x) const {
  check_width(x.size());
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * std[i % 10] + mean[i % 10];
  return out;
}

KvConfig NormStats::to_kv() const {
  KvConfig kv;
  auto join = [](const std::array<double, 10>& v) {
    std::ostringstream s;
    s.precision(17);
    for (std::size_t i = 0; i < v.size(); ++i) s << (i ? " " : "") << v[i];
    return s.str();
  };
  kv.set("mean", join(mean));
  kv.set("std", join(std));
  return kv;
}

NormStats NormStats::from_kv(const KvConfig& kv) {
  const auto m = kv.get_doubles("mean");
  const auto s = kv.get_doubles("std");
  if (m.size() != 10 || s.size() != 10) throw ConfigError("norm stats: mean and std need 10 values each");
  NormStats n;
  std::copy(m.begin(), m.end(), n.mean.begin());
  std::copy(s.begin(), s.end(), n.std.begin());
  for (double v : n.std) {
    if (!(v >= kMinStd)) throw ConfigError("norm stats: std below clamp");
  }
  return n;
}

void NormStats::save(const std::filesystem::path& path) const { to_kv().save(path); }

NormStats NormStats::load(const std::filesystem::path& path) { return from_kv(KvConfig::load(path)); }

NormStats compute_norm_stats(std::span<const std::vector<double>> chunks) {
  std::array<double, 10> sum{}, sumsq{};
  std::size_t count = 0;
  for (const auto& c : chunks) {
    check_width(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) sum[i % 10] += c[i];
    count += c.size() / 10;
  }
  if (count == 0) throw ContractError("compute_norm_stats: empty sample set");
  NormStats n;
  for (int d = 0; d < 10; ++d) n.mean[d] = sum[d] / static_cast<double>(count);
  for (const auto& c : chunks) {
    for (std::size_t i = 0; i < c.size(); ++i) {
      const double e = c[i] - n.mean[i % 10];
      sumsq[i % 10] += e * e;
    }
  }
  for (int d = 0; d < 10; ++d) n.std[d] = std::max(kMinStd, std::sqrt(sumsq[d] / static_cast<double>(count)));
  return n;
}

NormStats compute_norm_stats(std::span<const Sample> samples) {
  std::vector<std::vector<double>> chunks;
  chunks.reserve(samples.size());
  for (const auto& s : samples) chunks.push_back(s.future_actions);
  return compute_norm_stats(chunks);
}

}  // namespace spot::dataset
