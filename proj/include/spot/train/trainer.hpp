#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "spot/ad/optim.hpp"
#include "spot/common/kv_config.hpp"
#include "spot/dataset/norm.hpp"
#include "spot/dataset/samples.hpp"
#include "spot/model/spot_model.hpp"
#include "spot/train/objectives.hpp"
#include "spot/train/schedule.hpp"

namespace spot::train {

struct TrainConfig {
  double lr = 2e-4;
  std::size_t batch_size = 16;
  std::size_t epochs = 10;
  std::uint64_t max_steps = 0;  // overrides epochs when nonzero
  double grad_clip = 1.0;
  double weight_decay = 0.01;
  LrSchedule schedule = LrSchedule::kConstant;
  std::uint64_t warmup_steps = 0;
  double end_lr = 0.0;
  double power = 1.0;
  std::uint64_t cycles = 2;
  std::uint64_t seed = 0;
  std::uint64_t val_every = 0;  // steps; 0 disables periodic validation
  std::size_t val_batches = 16;
  std::uint64_t checkpoint_every = 0;  // steps; 0 keeps only the final checkpoint
  bool freeze_tokenizer = true;

  std::uint64_t total_steps(std::size_t train_samples) const;
  LrConfig lr_config() const;

  // Throws ConfigError.
  void validate() const;
  static TrainConfig from_kv(const KvConfig& kv);
  static TrainConfig load(const std::filesystem::path& path);
  KvConfig to_kv() const;
};

// Prompt payloads per episode (rendered frames are built once per first frame).
class PromptCache {
 public:
  const dataset::PromptPayload& get(const dataset::Sample& s, dataset::PromptVariant variant);

 private:
  std::map<std::pair<std::string, int>, dataset::PromptPayload> entries_;
};

model::ModelInput model_input(const dataset::Sample& s, const dataset::NormStats& norm,
                              dataset::PromptVariant variant, PromptCache& prompts);

struct LogRow {
  std::uint64_t step = 0;
  double lr = 0.0;
  double loss = 0.0;
  double grad_norm = 0.0;
};

struct ValRow {
  std::uint64_t step = 0;
  double loss = 0.0;
  std::size_t samples = 0;
};

struct TrainResult {
  std::vector<LogRow> log;
  std::vector<ValRow> validation;
  std::uint64_t steps = 0;
};

// Holds the per-run state shared by training, validation and inference.
class Trainer {
 public:
  Trainer(model::SpotModel& model, dataset::NormStats norm, TrainConfig config);

  // Loss of one sample with the given noise draw; builds a graph when grad is enabled.
  ad::Tensor sample_loss(const dataset::Sample& s, Rng& rng);
  // Mean loss over up to `val_batches` batches with noise from a fixed stream.
  ValRow validate(const std::vector<dataset::Sample>& samples, std::uint64_t step);

  // Writes train_log.csv, val_log.csv, run_config.txt, norm_stats.txt and checkpoints into `out_dir`
  // when it is non-empty. Throws NumericError on a non-finite loss after writing nan_snapshot.json.
  TrainResult fit(const std::vector<dataset::Sample>& train, const std::vector<dataset::Sample>& val,
                  const std::filesystem::path& out_dir = {});

  const ad::AdamW& optimizer() const { return optimizer_; }
  const TrainConfig& config() const { return config_; }
  const dataset::NormStats& norm() const { return norm_; }
  void on_step(std::function<void(const LogRow&)> callback) { on_step_ = std::move(callback); }

 private:
  model::SpotModel& model_;
  dataset::NormStats norm_;
  TrainConfig config_;
  ad::AdamW optimizer_;
  DdpmSchedule ddpm_;
  PromptCache prompts_;
  std::unique_ptr<model::ProjectionCache> projections_;
  std::function<void(const LogRow&)> on_step_;
};

// Metadata keys stored alongside parameters.
std::map<std::string, std::string> checkpoint_metadata(const model::ModelConfig& mc, const dataset::NormStats& norm,
                                                       const TrainConfig& tc, std::uint64_t step);
void save_training_checkpoint(const std::filesystem::path& path, const model::SpotModel& model,
                              const ad::AdamW* optimizer, const dataset::NormStats& norm, const TrainConfig& tc,
                              std::uint64_t step);

struct LoadedModel {
  std::unique_ptr<model::SpotModel> model;
  dataset::NormStats norm;
  std::uint64_t step = 0;
};
// Throws IoError for a missing file and ParseError for missing metadata.
LoadedModel load_trained_model(const std::filesystem::path& checkpoint);

// Denormalized H x 10 chunk predicted for one sample (Euler for flow, DDIM for diffusion).
struct InferenceConfig {
  std::size_t euler_steps = 10;
  std::size_t ddim_steps = 10;
  std::uint64_t seed = 0;
};
std::vector<double> predict_chunk(const model::SpotModel& model, const model::ModelInput& input,
                                  const dataset::NormStats& norm, const InferenceConfig& ic,
                                  model::ProjectionCache* cache = nullptr);

}  // namespace spot::train
