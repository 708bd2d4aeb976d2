#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "spot/ad/optim.hpp"

namespace spot::ad {

// On-disk layout (all integers and reals little-endian):
//   "SPCK" u32 version
//   u32 n_meta  { u32 len, key, u32 len, value } * n_meta
//   u64 optimizer_step  f64 lr beta1 beta2 eps weight_decay
//   u32 n_params { u32 len, name, u32 rank, u64 extents[rank], u32 flags,
//                  f64 values[numel], (flags & 1: f64 m[numel], f64 v[numel]) } * n_params
struct CheckpointEntry {
  std::string name;
  Shape shape;
  std::vector<double> values;
  std::optional<AdamW::Moments> moments;
};

struct Checkpoint {
  std::map<std::string, std::string> metadata;
  std::uint64_t step = 0;
  AdamWConfig optimizer;
  std::vector<CheckpointEntry> entries;

  const CheckpointEntry* find(const std::string& name) const;
};

// `params` lists every model parameter (trainable or not); moments come from `optimizer` when given.
void save_checkpoint(const std::filesystem::path& path, const ParameterList& params, const AdamW* optimizer,
                     const std::map<std::string, std::string>& metadata);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Copies stored values into `params` by name; shapes must match exactly.
void restore_parameters(const Checkpoint& ckpt, const ParameterList& params);
AdamW restore_optimizer(const Checkpoint& ckpt);

}  // namespace spot::ad
