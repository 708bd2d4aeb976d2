#pragma once

#include <filesystem>
#include <functional>
#include <vector>

#include "spot/dataset/norm.hpp"
#include "spot/dataset/samples.hpp"
#include "spot/eval/metrics.hpp"
#include "spot/model/spot_model.hpp"
#include "spot/train/trainer.hpp"

namespace spot::eval {

// Denormalized H x 10 chunk for one sample.
using ChunkPredictor = std::function<std::vector<double>(const dataset::Sample&)>;
// Called once per worker so predictors can keep thread-local caches.
using PredictorFactory = std::function<ChunkPredictor()>;

PredictorFactory model_predictor(const model::SpotModel& model, const dataset::NormStats& norm,
                                 const train::InferenceConfig& ic);
PredictorFactory ground_truth_predictor();

// Scores in input order. threads == 0 uses the hardware concurrency.
std::vector<SampleScore> score_samples(const std::vector<dataset::Sample>& samples, const PredictorFactory& factory,
                                       unsigned threads = 0);

std::string metrics_csv(std::span<const SampleScore> scores);

// <out_dir>/eval_metrics/<scope>/{summary.json,metrics.csv} for "all" and every scene.
std::vector<MetricsReport> write_eval_outputs(const std::filesystem::path& out_dir,
                                              std::span<const SampleScore> scores, std::uint64_t seed);

std::vector<MetricsReport> evaluate(const model::SpotModel& model, const dataset::NormStats& norm,
                                    const std::vector<dataset::Sample>& samples, const train::InferenceConfig& ic,
                                    const std::filesystem::path& out_dir, unsigned threads = 0);

}  // namespace spot::eval
