#include "spot/eval/evaluate.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

#include "spot/common/array_io.hpp"
#include "spot/common/error.hpp"

namespace spot::eval {

namespace fs = std::filesystem;

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

PredictorFactory model_predictor(const model::SpotModel& model, const dataset::NormStats& norm,
                                 const train::InferenceConfig& ic) {
  return [&model, norm, ic]() -> ChunkPredictor {
    auto prompts = std::make_shared<train::PromptCache>();
    auto projections = std::make_shared<model::ProjectionCache>();
    return [&model, norm, ic, prompts, projections](const dataset::Sample& s) {
      const auto input = train::model_input(s, norm, model.config().variant, *prompts);
      return train::predict_chunk(model, input, norm, ic, projections.get());
    };
  };
}

PredictorFactory ground_truth_predictor() {
  return [] { return ChunkPredictor([](const dataset::Sample& s) { return s.future_actions; }); };
}

std::vector<SampleScore> score_samples(const std::vector<dataset::Sample>& samples, const PredictorFactory& factory,
                                       unsigned threads) {
  std::vector<SampleScore> out(samples.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(1, samples.size())));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    try {
      const ChunkPredictor predict = factory();
      for (std::size_t i = next++; i < samples.size(); i = next++) {
        const auto& s = samples[i];
        SampleScore r = score_chunk(predict(s), s.future_actions);
        r.scene = s.scene;
        r.task = s.task;
        r.episode = s.episode;
        r.timestep = s.timestep;
        r.frame_index = s.frame_index;
        r.is_final_chunk = s.is_final_chunk;
        out[i] = std::move(r);
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next = samples.size();
    }
  };
  if (threads == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::string metrics_csv(std::span<const SampleScore> scores) {
  std::ostringstream csv;
  csv << "key,scene,task,episode,timestep,frame_index,is_final_chunk,endpoint_error,pos_l2,rot_l2,grip_l1\n";
  for (const auto& s : scores) {
    csv << s.key() << ',' << s.scene << ',' << s.task << ',' << s.episode << ',' << s.timestep << ','
        << s.frame_index << ',' << (s.is_final_chunk ? 1 : 0) << ',' << num(s.endpoint) << ',' << num(s.pos_l2)
        << ',' << num(s.rot_l2) << ',' << num(s.grip_l1) << '\n';
  }
  return csv.str();
}

std::vector<MetricsReport> write_eval_outputs(const fs::path& out_dir, std::span<const SampleScore> scores,
                                              std::uint64_t seed) {
  const auto reports = aggregate_by_scope(scores, seed);
  std::map<std::string, std::vector<SampleScore>> by_scene;
  for (const auto& s : scores) by_scene[s.scene].push_back(s);
  for (const auto& r : reports) {
    const fs::path dir = out_dir / "eval_metrics" / r.scope;
    fs::create_directories(dir);
    write_file_atomic(dir / "summary.json", r.to_json());
    write_file_atomic(dir / "metrics.csv", r.scope == "all" ? metrics_csv(scores) : metrics_csv(by_scene[r.scope]));
  }
  return reports;
}

std::vector<MetricsReport> evaluate(const model::SpotModel& model, const dataset::NormStats& norm,
                                    const std::vector<dataset::Sample>& samples, const train::InferenceConfig& ic,
                                    const fs::path& out_dir, unsigned threads) {
  if (samples.empty()) throw ContractError("evaluate: no validation samples");
  const auto scores = score_samples(samples, model_predictor(model, norm, ic), threads);
  return write_eval_outputs(out_dir, scores, ic.seed);
}

}  // namespace spot::eval
