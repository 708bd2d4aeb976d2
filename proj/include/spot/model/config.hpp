#pragma once

#include <cstddef>
#include <filesystem>
#include <string>

#include "spot/common/kv_config.hpp"
#include "spot/dataset/samples.hpp"

namespace spot::model {

enum class HeadKind { kFlow, kDiffusion };

// "flow" | "diffusion". Throws ConfigError.
HeadKind parse_head(const std::string& name);
std::string head_name(HeadKind h);

struct ModelConfig {
  std::size_t d_model = 64;
  std::size_t patch = 16;
  std::size_t image_width = 128;
  std::size_t image_height = 128;
  std::size_t fusion_layers = 4;
  std::size_t fusion_heads = 4;
  std::size_t decoder_layers = 6;
  std::size_t decoder_heads = 4;
  std::size_t history = 4;   // K
  std::size_t horizon = 16;  // H
  std::size_t fourier_freqs = 8;
  std::size_t mlp_ratio = 4;
  std::size_t time_freqs = 16;  // sinusoid periods in the time embedding
  std::size_t diffusion_steps = 100;
  HeadKind head = HeadKind::kFlow;
  dataset::PromptVariant variant = dataset::PromptVariant::kBbox;

  std::size_t num_patches() const { return (image_width / patch) * (image_height / patch); }
  std::size_t patch_dim() const { return patch * patch * 3; }
  std::size_t prompt_tokens() const;
  std::size_t task_tokens() const { return 1 + prompt_tokens(); }
  // [task | current frame | history]
  std::size_t condition_length() const { return task_tokens() + num_patches() + 1 + history; }

  // Throws ConfigError.
  void validate() const;

  static ModelConfig from_kv(const KvConfig& kv);
  static ModelConfig load(const std::filesystem::path& path);
  KvConfig to_kv() const;
  void save(const std::filesystem::path& path) const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

}  // namespace spot::model
