#include "spot/train/trainer.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <json.hpp>
#include <sstream>

#include "spot/ad/checkpoint.hpp"
#include "spot/ad/ops.hpp"
#include "spot/common/array_io.hpp"
#include "spot/common/error.hpp"
#include "spot/train/sampler.hpp"

namespace spot::train {

using ad::Tensor;
using dataset::PromptVariant;
using dataset::Sample;

namespace {

std::string num(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

}  // namespace

std::uint64_t TrainConfig::total_steps(std::size_t n) const {
  if (max_steps > 0) return max_steps;
  const std::uint64_t per_epoch = (n + batch_size - 1) / batch_size;
  return per_epoch * epochs;
}

LrConfig TrainConfig::lr_config() const {
  LrConfig c;
  c.kind = schedule;
  c.base = lr;
  c.warmup_steps = warmup_steps;
  c.end_lr = end_lr;
  c.power = power;
  c.cycles = cycles;
  return c;
}

void TrainConfig::validate() const {
  auto need = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError("train config: " + msg);
  };
  need(lr > 0 && std::isfinite(lr), "lr must be positive");
  need(batch_size > 0, "batch_size must be positive");
  need(epochs > 0 || max_steps > 0, "epochs must be positive");
  need(grad_clip > 0, "grad_clip must be positive");
  need(weight_decay >= 0, "weight_decay must be non-negative");
  need(end_lr >= 0 && end_lr <= lr, "end_lr must lie in [0, lr]");
  need(power > 0, "power must be positive");
  need(cycles > 0, "cycles must be positive");
  need(val_batches > 0, "val_batches must be positive");
}

TrainConfig TrainConfig::from_kv(const KvConfig& kv) {
  TrainConfig c;
  for (const auto& key : kv.keys()) {
    auto u64 = [&] {
      const long long v = kv.get_int(key, 0);
      if (v < 0) throw ConfigError("train config: '" + key + "' must be non-negative");
      return static_cast<std::uint64_t>(v);
    };
    if (key == "lr") c.lr = kv.get_double(key, c.lr);
    else if (key == "batch_size") c.batch_size = u64();
    else if (key == "epochs") c.epochs = u64();
    else if (key == "max_steps") c.max_steps = u64();
    else if (key == "grad_clip") c.grad_clip = kv.get_double(key, c.grad_clip);
    else if (key == "weight_decay") c.weight_decay = kv.get_double(key, c.weight_decay);
    else if (key == "schedule") c.schedule = parse_schedule(*kv.get(key));
    else if (key == "warmup_steps") c.warmup_steps = u64();
    else if (key == "end_lr") c.end_lr = kv.get_double(key, c.end_lr);
    else if (key == "power") c.power = kv.get_double(key, c.power);
    else if (key == "cycles") c.cycles = u64();
    else if (key == "seed") c.seed = u64();
    else if (key == "val_every") c.val_every = u64();
    else if (key == "val_batches") c.val_batches = u64();
    else if (key == "checkpoint_every") c.checkpoint_every = u64();
    else if (key == "freeze_tokenizer") c.freeze_tokenizer = kv.get_bool(key, c.freeze_tokenizer);
    else throw ConfigError("train config: unknown key '" + key + "'");
  }
  c.validate();
  return c;
}

TrainConfig TrainConfig::load(const std::filesystem::path& path) { return from_kv(KvConfig::load(path)); }

KvConfig TrainConfig::to_kv() const {
  KvConfig kv;
  kv.set("lr", num(lr));
  kv.set("batch_size", std::to_string(batch_size));
  kv.set("epochs", std::to_string(epochs));
  kv.set("max_steps", std::to_string(max_steps));
  kv.set("grad_clip", num(grad_clip));
  kv.set("weight_decay", num(weight_decay));
  kv.set("schedule", schedule_name(schedule));
  kv.set("warmup_steps", std::to_string(warmup_steps));
  kv.set("end_lr", num(end_lr));
  kv.set("power", num(power));
  kv.set("cycles", std::to_string(cycles));
  kv.set("seed", std::to_string(seed));
  kv.set("val_every", std::to_string(val_every));
  kv.set("val_batches", std::to_string(val_batches));
  kv.set("checkpoint_every", std::to_string(checkpoint_every));
  kv.set("freeze_tokenizer", freeze_tokenizer ? "true" : "false");
  return kv;
}

const dataset::PromptPayload& PromptCache::get(const Sample& s, PromptVariant variant) {
  const auto key = std::make_pair(s.key(), static_cast<int>(variant));
  if (auto it = entries_.find(key); it != entries_.end()) return it->second;
  if (variant != PromptVariant::kNone && (!s.object_box || !s.target_box)) {
    throw ContractError(s.key() + ": prompt variant '" + dataset::variant_name(variant) + "' needs annotation boxes");
  }
  const pipeline::Box none{};
  auto payload = dataset::prompt_payload(variant, s.object_box.value_or(none), s.target_box.value_or(none),
                                         s.image_width, s.image_height, s.first_frame);
  return entries_.emplace(key, std::move(payload)).first->second;
}

model::ModelInput model_input(const Sample& s, const dataset::NormStats& norm, PromptVariant variant,
                              PromptCache& prompts) {
  model::ModelInput in;
  in.first_frame = s.first_frame;
  in.current_frame = s.current_frame;
  in.prompt = prompts.get(s, variant);
  in.history = norm.normalize(s.action_history);
  return in;
}

Trainer::Trainer(model::SpotModel& model, dataset::NormStats norm, TrainConfig config)
    : model_(model),
      norm_(norm),
      config_(config),
      optimizer_(ad::AdamWConfig{config.lr, 0.9, 0.999, 1e-8, config.weight_decay}),
      ddpm_(DdpmSchedule::make(model.config().diffusion_steps)) {
  config_.validate();
  for (const auto& p : model_.parameters()) {
    auto t = p.tensor;
    t.set_requires_grad(!(config_.freeze_tokenizer && model::SpotModel::is_tokenizer_parameter(p.name)));
  }
  if (config_.freeze_tokenizer) projections_ = std::make_unique<model::ProjectionCache>();
}

Tensor Trainer::sample_loss(const Sample& s, Rng& rng) {
  const auto& mc = model_.config();
  const auto input = model_input(s, norm_, mc.variant, prompts_);
  const auto cond = model_.condition(input, projections_.get());
  const Tensor x0 = Tensor::from({mc.horizon, 10}, norm_.normalize(s.future_actions));
  const Tensor eps = gaussian_tensor({mc.horizon, 10}, rng);
  if (mc.head == model::HeadKind::kFlow) {
    const double t = sample_flow_time(rng);
    return flow_loss([&](const Tensor& x, double tt) { return model_.velocity_forward(x, tt, cond); }, x0, eps, t);
  }
  const std::size_t k = static_cast<std::size_t>(rng() % ddpm_.steps());
  return ddpm_loss([&](const Tensor& x, std::size_t kk) { return model_.diffusion_forward(x, kk, cond); }, ddpm_, x0,
                   eps, k);
}

ValRow Trainer::validate(const std::vector<Sample>& samples, std::uint64_t step) {
  ad::NoGradGuard guard;
  Rng rng(combine_seed({config_.seed, hash_string("validation")}));
  const std::size_t n = std::min(samples.size(), config_.val_batches * config_.batch_size);
  ValRow row;
  row.step = step;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += sample_loss(samples[i], rng).item();
  row.samples = n;
  row.loss = n ? sum / static_cast<double>(n) : 0.0;
  return row;
}

std::map<std::string, std::string> checkpoint_metadata(const model::ModelConfig& mc, const dataset::NormStats& norm,
                                                       const TrainConfig& tc, std::uint64_t step) {
  return {{"model_config", mc.to_kv().to_string()},
          {"norm_stats", norm.to_kv().to_string()},
          {"train_config", tc.to_kv().to_string()},
          {"step", std::to_string(step)}};
}

void save_training_checkpoint(const std::filesystem::path& path, const model::SpotModel& model,
                              const ad::AdamW* optimizer, const dataset::NormStats& norm, const TrainConfig& tc,
                              std::uint64_t step) {
  ad::save_checkpoint(path, model.parameters(), optimizer, checkpoint_metadata(model.config(), norm, tc, step));
}

LoadedModel load_trained_model(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("no checkpoint at " + path.string());
  const auto ckpt = ad::load_checkpoint(path);
  auto meta = [&](const std::string& key) {
    auto it = ckpt.metadata.find(key);
    if (it == ckpt.metadata.end()) throw ParseError(path.string() + ": checkpoint lacks '" + key + "' metadata");
    return it->second;
  };
  LoadedModel out;
  out.model = std::make_unique<model::SpotModel>(model::ModelConfig::from_kv(KvConfig::parse(meta("model_config"))), 0);
  out.norm = dataset::NormStats::from_kv(KvConfig::parse(meta("norm_stats")));
  out.step = ckpt.step;
  ad::restore_parameters(ckpt, out.model->parameters());
  return out;
}

TrainResult Trainer::fit(const std::vector<Sample>& train, const std::vector<Sample>& val,
                         const std::filesystem::path& out_dir) {
  if (train.empty()) throw ContractError("train: no training samples");
  const std::uint64_t total = config_.total_steps(train.size());
  const auto lr_cfg = config_.lr_config();
  const auto params = model_.trainable_parameters(config_.freeze_tokenizer);
  const std::size_t batch = std::min(config_.batch_size, train.size());
  Rng rng(combine_seed({config_.seed, hash_string("train")}));

  std::ofstream log_csv, val_csv;
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    KvConfig echo = model_.config().to_kv();
    for (const auto& key : config_.to_kv().keys()) echo.set("train." + key, *config_.to_kv().get(key));
    write_file_atomic(out_dir / "run_config.txt", echo.to_string());
    norm_.save(out_dir / "norm_stats.txt");
    log_csv.open(out_dir / "train_log.csv");
    log_csv << "step,lr,loss,grad_norm\n";
    val_csv.open(out_dir / "val_log.csv");
    val_csv << "step,val_loss,samples\n";
    log_csv.precision(10);
    val_csv.precision(10);
  }

  std::vector<std::size_t> order(train.size());
  std::size_t cursor = order.size();
  auto reshuffle = [&] {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
    cursor = 0;
  };

  TrainResult result;
  for (std::uint64_t step = 1; step <= total; ++step) {
    std::vector<const Sample*> picked;
    for (std::size_t b = 0; b < batch; ++b) {
      if (cursor == order.size()) reshuffle();
      picked.push_back(&train[order[cursor++]]);
    }
    const double lr = lr_at(lr_cfg, step - 1, total);
    double loss_sum = 0.0;
    try {
      for (const Sample* s : picked) {
        const Tensor loss = sample_loss(*s, rng);
        if (!std::isfinite(loss.item())) throw NumericError("loss is not finite");
        loss_sum += loss.item();
        ad::backward(ad::scale(loss, 1.0 / static_cast<double>(batch)));
      }
    } catch (const NumericError& e) {
      if (!out_dir.empty()) {
        nlohmann::ordered_json snap;
        snap["step"] = step;
        snap["lr"] = lr;
        snap["error"] = e.what();
        for (const Sample* s : picked) snap["batch"].push_back(s->key() + "@" + std::to_string(s->timestep));
        for (std::size_t i = result.log.size() > 10 ? result.log.size() - 10 : 0; i < result.log.size(); ++i) {
          snap["recent_losses"].push_back(result.log[i].loss);
        }
        write_file_atomic(out_dir / "nan_snapshot.json", snap.dump(2) + "\n");
      }
      throw NumericError("non-finite loss at step " + std::to_string(step) + ": " + e.what());
    }
    ad::ParameterList touched;
    for (const auto& p : params) {
      if (p.tensor.has_grad()) touched.push_back(p);
    }
    const double gnorm = ad::clip_grad_norm(touched, config_.grad_clip);
    optimizer_.set_lr(lr);
    optimizer_.step(touched);
    ad::clear_grads(touched);

    LogRow row{step, lr, loss_sum / static_cast<double>(batch), gnorm};
    result.log.push_back(row);
    if (log_csv.is_open()) log_csv << row.step << ',' << row.lr << ',' << row.loss << ',' << row.grad_norm << '\n';
    if (on_step_) on_step_(row);

    const bool val_now = !val.empty() && config_.val_every > 0 && (step % config_.val_every == 0 || step == total);
    if (val_now) {
      const auto vr = validate(val, step);
      result.validation.push_back(vr);
      if (val_csv.is_open()) val_csv << vr.step << ',' << vr.loss << ',' << vr.samples << '\n';
    }
    if (!out_dir.empty() && config_.checkpoint_every > 0 && step % config_.checkpoint_every == 0) {
      save_training_checkpoint(out_dir / ("checkpoint_" + std::to_string(step) + ".bin"), model_, &optimizer_, norm_,
                               config_, step);
    }
  }
  result.steps = total;
  if (!out_dir.empty()) {
    save_training_checkpoint(out_dir / "checkpoint.bin", model_, &optimizer_, norm_, config_, total);
  }
  return result;
}

std::vector<double> predict_chunk(const model::SpotModel& model, const model::ModelInput& input,
                                  const dataset::NormStats& norm, const InferenceConfig& ic,
                                  model::ProjectionCache* cache) {
  ad::NoGradGuard guard;
  const auto& mc = model.config();
  const auto cond = model.condition(input, cache);
  const ad::Shape shape{mc.horizon, 10};
  Tensor x;
  if (mc.head == model::HeadKind::kFlow) {
    x = euler_sample([&](const Tensor& xt, double t) { return model.velocity_forward(xt, t, cond); }, shape,
                     ic.euler_steps, ic.seed);
  } else {
    const auto sched = DdpmSchedule::make(mc.diffusion_steps);
    x = ddim_sample([&](const Tensor& xk, std::size_t k) { return model.diffusion_forward(xk, k, cond); }, sched,
                    shape, ic.ddim_steps, ic.seed);
  }
  return norm.denormalize(x.values());
}

}  // namespace spot::train
