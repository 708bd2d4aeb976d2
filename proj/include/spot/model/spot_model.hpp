#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "spot/ad/optim.hpp"
#include "spot/ad/tensor.hpp"
#include "spot/common/raster.hpp"
#include "spot/dataset/samples.hpp"
#include "spot/model/config.hpp"

namespace spot::model {

// [sin(2^f pi x)]_f, [cos(2^f pi x)]_f, [sin(2^f pi y)]_f, [cos(2^f pi y)]_f for f = 0..F-1.
std::vector<double> fourier_features(double x, double y, std::size_t freqs);

// Periods geometrically spaced over [0.004, 4.0]; returns [sin(2 pi t / p)]_p followed by [cos(2 pi t / p)]_p.
std::vector<double> time_features(double t, std::size_t periods);

// Patches in row-major patch order; each flattened as (row, col, channel) with values mapped to [-1, 1].
// Throws ConfigError if the raster size does not match the config.
ad::Tensor patchify(const Raster& img, const ModelConfig& config);

struct ImageTokens {
  ad::Tensor patches;  // [N, D]
  ad::Tensor summary;  // [1, D]
};

struct ConditionTokens {
  ad::Tensor tokens;  // [task | current frame | history] x D
  std::size_t task = 0;
  std::size_t frame = 0;
  std::size_t history = 0;

  std::size_t length() const { return task + frame + history; }
};

// Collects every attention probability map produced during a forward pass.
struct AttentionTrace {
  std::vector<ad::Tensor> maps;
};

// Patch projections keyed by raster address; valid only while the tokenizer is frozen.
class ProjectionCache {
 public:
  const ad::Tensor* find(const Raster* img) const;
  void put(const Raster* img, ad::Tensor projection);
  std::size_t size() const { return entries_.size(); }
  void clear() { entries_.clear(); }

 private:
  std::unordered_map<const Raster*, ad::Tensor> entries_;
};

struct ModelInput {
  std::shared_ptr<const Raster> first_frame;
  std::shared_ptr<const Raster> current_frame;
  dataset::PromptPayload prompt;
  std::vector<double> history;  // K x 10, normalized
};

class SpotModel {
 public:
  // Parameters are drawn from `seed`; identical (config, seed) gives identical weights.
  SpotModel(ModelConfig config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  const ad::ParameterList& parameters() const { return params_; }
  // Tokenizer parameters are excluded when `freeze_tokenizer` is set.
  ad::ParameterList trainable_parameters(bool freeze_tokenizer) const;
  static bool is_tokenizer_parameter(const std::string& name);
  const ad::Tensor& param(const std::string& name) const;
  std::size_t parameter_count() const;

  // Linear patch projection [N, D] before positional embedding.
  ad::Tensor project_patches(const Raster& img) const;
  ImageTokens tokens_from_projection(const ad::Tensor& projection, AttentionTrace* trace = nullptr) const;
  ImageTokens tokenize_image(const Raster& img, AttentionTrace* trace = nullptr) const;

  // Throws ContractError when the payload does not carry what the variant needs.
  ad::Tensor encode_prompts(const dataset::PromptPayload& payload) const;
  // Returns [first-frame summary ; fused prompt tokens].
  ad::Tensor task_encode(const ImageTokens& first, const ad::Tensor& prompts, AttentionTrace* trace = nullptr) const;
  // [K, 10] normalized actions -> [K, D]. With K = 0 both input and output are undefined tensors.
  ad::Tensor encode_history(const ad::Tensor& history) const;
  ConditionTokens assemble_condition(const ad::Tensor& task, const ImageTokens& current,
                                     const ad::Tensor& history) const;
  ad::Tensor time_embed(double t) const;

  // Full conditioning path. `cache` may be supplied only while the tokenizer is frozen.
  ConditionTokens condition(const ModelInput& input, ProjectionCache* cache = nullptr,
                            AttentionTrace* trace = nullptr) const;

  // x_t [H, 10] -> velocity [H, 10].
  ad::Tensor velocity_forward(const ad::Tensor& x, double t, const ConditionTokens& cond,
                              AttentionTrace* trace = nullptr) const;
  // x_k [H, 10] at timestep index k in [0, diffusion_steps) -> predicted noise [H, 10].
  ad::Tensor diffusion_forward(const ad::Tensor& x, std::size_t k, const ConditionTokens& cond,
                               AttentionTrace* trace = nullptr) const;

  // Rendered prompt frame for the vision variants, the raw first frame otherwise.
  const Raster& task_frame(const ModelInput& input) const;

 private:
  ad::Tensor add_param(const std::string& name, ad::Tensor t);
  ad::Tensor linear(const std::string& prefix, const ad::Tensor& x) const;
  ad::Tensor norm(const std::string& prefix, const ad::Tensor& x) const;
  ad::Tensor mlp(const std::string& prefix, const ad::Tensor& x) const;
  ad::Tensor attention(const std::string& prefix, const ad::Tensor& q_in, const ad::Tensor& kv_in, std::size_t heads,
                       AttentionTrace* trace) const;
  ad::Tensor block(const std::string& prefix, const ad::Tensor& x, const ad::Tensor& memory, std::size_t heads,
                   AttentionTrace* trace) const;
  ad::Tensor decode(const ad::Tensor& x, const ad::Tensor& temb, const ConditionTokens& cond,
                    AttentionTrace* trace) const;
  ImageTokens image_tokens(const Raster& img, ProjectionCache* cache, AttentionTrace* trace) const;

  ModelConfig config_;
  ad::ParameterList params_;
  std::map<std::string, std::size_t> index_;
};

}  // namespace spot::model
