#include "spot/model/spot_model.hpp"

#include <cmath>
#include <numbers>

#include "spot/ad/init.hpp"
#include "spot/ad/ops.hpp"
#include "spot/common/error.hpp"
#include "spot/common/rng.hpp"

namespace spot::model {

using ad::Tensor;

namespace {

constexpr std::size_t kRoleObject = 0;
constexpr std::size_t kRoleTarget = 1;
constexpr std::size_t kTypeCornerMin = 0;
constexpr std::size_t kTypeCornerMax = 1;
constexpr std::size_t kTypePoint = 2;
constexpr std::size_t kTypeNull = 3;

constexpr std::size_t kComponentTask = 0;
constexpr std::size_t kComponentFrame = 1;
constexpr std::size_t kComponentHistory = 2;

Tensor row(const Tensor& table, std::size_t i) { return ad::embedding_lookup(table, {i}); }

}  // namespace

std::vector<double> fourier_features(double x, double y, std::size_t freqs) {
  std::vector<double> out(4 * freqs);
  for (std::size_t f = 0; f < freqs; ++f) {
    const double w = std::ldexp(std::numbers::pi, static_cast<int>(f));
    out[f] = std::sin(w * x);
    out[freqs + f] = std::cos(w * x);
    out[2 * freqs + f] = std::sin(w * y);
    out[3 * freqs + f] = std::cos(w * y);
  }
  return out;
}

std::vector<double> time_features(double t, std::size_t periods) {
  std::vector<double> out(2 * periods);
  const double lo = 0.004, hi = 4.0;
  for (std::size_t i = 0; i < periods; ++i) {
    const double p = lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(periods - 1));
    const double a = 2.0 * std::numbers::pi * t / p;
    out[i] = std::sin(a);
    out[periods + i] = std::cos(a);
  }
  return out;
}

Tensor patchify(const Raster& img, const ModelConfig& c) {
  if (static_cast<std::size_t>(img.width) != c.image_width || static_cast<std::size_t>(img.height) != c.image_height) {
    throw ConfigError("image is " + std::to_string(img.width) + "x" + std::to_string(img.height) + ", model expects " +
                      std::to_string(c.image_width) + "x" + std::to_string(c.image_height));
  }
  const std::size_t p = c.patch, cols = c.image_width / p, rows = c.image_height / p, dim = c.patch_dim();
  std::vector<double> out(rows * cols * dim);
  for (std::size_t pr = 0; pr < rows; ++pr) {
    for (std::size_t pc = 0; pc < cols; ++pc) {
      double* dst = out.data() + (pr * cols + pc) * dim;
      for (std::size_t y = 0; y < p; ++y) {
        const std::uint8_t* src = img.rgb.data() + ((pr * p + y) * c.image_width + pc * p) * 3;
        for (std::size_t i = 0; i < p * 3; ++i) *dst++ = src[i] / 127.5 - 1.0;
      }
    }
  }
  return Tensor::from({rows * cols, dim}, std::move(out));
}

const Tensor* ProjectionCache::find(const Raster* img) const {
  auto it = entries_.find(img);
  return it == entries_.end() ? nullptr : &it->second;
}

void ProjectionCache::put(const Raster* img, Tensor projection) { entries_[img] = std::move(projection); }

SpotModel::SpotModel(ModelConfig config, std::uint64_t seed) : config_(config) {
  config_.validate();
  Rng rng(combine_seed({seed, hash_string("spot_model")}));
  const auto& c = config_;
  const std::size_t d = c.d_model, hidden = c.mlp_ratio * d;

  auto lin = [&](const std::string& prefix, std::size_t in, std::size_t out) {
    add_param(prefix + ".w", ad::init_linear_weight(in, out, rng));
    add_param(prefix + ".b", ad::init_zeros({out}));
  };
  auto ln = [&](const std::string& prefix) {
    add_param(prefix + ".g", ad::init_ones({d}));
    add_param(prefix + ".b", ad::init_zeros({d}));
  };
  auto attn = [&](const std::string& prefix) {
    for (const char* n : {".q", ".k", ".v", ".o"}) lin(prefix + n, d, d);
  };
  auto mlp_params = [&](const std::string& prefix, std::size_t in) {
    lin(prefix + ".fc1", in, hidden);
    lin(prefix + ".fc2", hidden, d);
  };
  auto blk = [&](const std::string& prefix) {
    ln(prefix + ".ln1");
    attn(prefix + ".self");
    ln(prefix + ".ln2");
    attn(prefix + ".cross");
    ln(prefix + ".ln3");
    mlp_params(prefix + ".mlp", d);
  };

  lin("tokenizer.patch", c.patch_dim(), d);
  add_param("tokenizer.summary_query", ad::init_normal({1, d}, rng));
  add_param("tokenizer.summary_key.w", ad::init_linear_weight(d, d, rng));
  add_param("image.pos", ad::init_normal({c.num_patches(), d}, rng));

  mlp_params("prompt.mlp", 4 * c.fourier_freqs);
  add_param("prompt.role", ad::init_normal({2, d}, rng));
  add_param("prompt.type", ad::init_normal({4, d}, rng));
  add_param("prompt.null", ad::init_normal({2, d}, rng));

  ln("task.memory_ln");
  for (std::size_t l = 0; l < c.fusion_layers; ++l) blk("task.layer" + std::to_string(l));

  mlp_params("history.mlp", 10);
  if (c.history > 0) add_param("history.pos", ad::init_normal({c.history, d}, rng));
  add_param("condition.type", ad::init_normal({3, d}, rng));

  mlp_params("time.mlp", 2 * c.time_freqs);

  lin("decoder.in", 10, d);
  add_param("decoder.pos", ad::init_normal({c.horizon, d}, rng));
  ln("decoder.memory_ln");
  for (std::size_t l = 0; l < c.decoder_layers; ++l) blk("decoder.layer" + std::to_string(l));
  ln("decoder.out_ln");
  lin("decoder.out", d, 10);

  for (auto& p : params_) p.tensor.set_requires_grad(true);
}

Tensor SpotModel::add_param(const std::string& name, Tensor t) {
  if (index_.count(name)) throw InternalError("duplicate parameter " + name);
  index_[name] = params_.size();
  params_.push_back({name, t});
  return t;
}

const Tensor& SpotModel::param(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("unknown parameter " + name);
  return params_[it->second].tensor;
}

bool SpotModel::is_tokenizer_parameter(const std::string& name) { return name.rfind("tokenizer.", 0) == 0; }

ad::ParameterList SpotModel::trainable_parameters(bool freeze_tokenizer) const {
  ad::ParameterList out;
  for (const auto& p : params_) {
    if (!(freeze_tokenizer && is_tokenizer_parameter(p.name))) out.push_back(p);
  }
  return out;
}

std::size_t SpotModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.tensor.numel();
  return n;
}

Tensor SpotModel::linear(const std::string& prefix, const Tensor& x) const {
  return ad::linear(x, param(prefix + ".w"), param(prefix + ".b"));
}

Tensor SpotModel::norm(const std::string& prefix, const Tensor& x) const {
  return ad::add(ad::mul(ad::layer_norm(x, 1), param(prefix + ".g")), param(prefix + ".b"));
}

Tensor SpotModel::mlp(const std::string& prefix, const Tensor& x) const {
  return linear(prefix + ".fc2", ad::gelu(linear(prefix + ".fc1", x)));
}

Tensor SpotModel::attention(const std::string& prefix, const Tensor& q_in, const Tensor& kv_in, std::size_t heads,
                            AttentionTrace* trace) const {
  const Tensor q = linear(prefix + ".q", q_in);
  const Tensor k = linear(prefix + ".k", kv_in);
  const Tensor v = linear(prefix + ".v", kv_in);
  const std::size_t dh = config_.d_model / heads;
  const double s = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Tensor> outs;
  for (std::size_t h = 0; h < heads; ++h) {
    const Tensor qh = ad::slice(q, 1, h * dh, (h + 1) * dh);
    const Tensor kh = ad::slice(k, 1, h * dh, (h + 1) * dh);
    const Tensor vh = ad::slice(v, 1, h * dh, (h + 1) * dh);
    const Tensor p = ad::softmax(ad::scale(ad::matmul(qh, ad::transpose(kh)), s), 1);
    if (trace) trace->maps.push_back(p);
    outs.push_back(ad::matmul(p, vh));
  }
  return linear(prefix + ".o", heads == 1 ? outs.front() : ad::concat(outs, 1));
}

Tensor SpotModel::block(const std::string& prefix, const Tensor& x, const Tensor& memory, std::size_t heads,
                        AttentionTrace* trace) const {
  const Tensor a = norm(prefix + ".ln1", x);
  Tensor h = ad::add(x, attention(prefix + ".self", a, a, heads, trace));
  h = ad::add(h, attention(prefix + ".cross", norm(prefix + ".ln2", h), memory, heads, trace));
  return ad::add(h, mlp(prefix + ".mlp", norm(prefix + ".ln3", h)));
}

Tensor SpotModel::project_patches(const Raster& img) const {
  return linear("tokenizer.patch", patchify(img, config_));
}

ImageTokens SpotModel::tokens_from_projection(const Tensor& projection, AttentionTrace* trace) const {
  ImageTokens out;
  out.patches = ad::add(projection, param("image.pos"));
  const Tensor keys = ad::matmul(out.patches, param("tokenizer.summary_key.w"));
  const double s = 1.0 / std::sqrt(static_cast<double>(config_.d_model));
  const Tensor p = ad::softmax(ad::scale(ad::matmul(param("tokenizer.summary_query"), ad::transpose(keys)), s), 1);
  if (trace) trace->maps.push_back(p);
  out.summary = ad::matmul(p, out.patches);
  return out;
}

ImageTokens SpotModel::tokenize_image(const Raster& img, AttentionTrace* trace) const {
  return tokens_from_projection(project_patches(img), trace);
}

ImageTokens SpotModel::image_tokens(const Raster& img, ProjectionCache* cache, AttentionTrace* trace) const {
  if (!cache) return tokenize_image(img, trace);
  if (const Tensor* hit = cache->find(&img)) return tokens_from_projection(*hit, trace);
  Tensor proj;
  {
    ad::NoGradGuard guard;
    proj = project_patches(img);
  }
  cache->put(&img, proj);
  return tokens_from_projection(proj, trace);
}

Tensor SpotModel::encode_prompts(const dataset::PromptPayload& payload) const {
  using dataset::PromptVariant;
  const auto v = config_.variant;
  if (payload.variant != v) {
    throw ContractError("prompt payload is '" + dataset::variant_name(payload.variant) + "' but the model expects '" +
                        dataset::variant_name(v) + "'");
  }
  const std::size_t f = config_.fourier_freqs;
  std::vector<double> feats;
  std::vector<std::size_t> roles, types;
  auto push = [&](double x, double y, std::size_t role, std::size_t type) {
    const auto ff = fourier_features(x, y, f);
    feats.insert(feats.end(), ff.begin(), ff.end());
    roles.push_back(role);
    types.push_back(type);
  };
  if (dataset::uses_box_coords(v)) {
    if (!payload.object_box || !payload.target_box) throw ContractError("box prompt variant needs both boxes");
    for (const auto& [box, role] : {std::pair{*payload.object_box, kRoleObject}, {*payload.target_box, kRoleTarget}}) {
      push(box[0], box[1], role, kTypeCornerMin);
      push(box[2], box[3], role, kTypeCornerMax);
    }
  } else if (dataset::uses_point_coords(v)) {
    if (!payload.object_point || !payload.target_point) throw ContractError("point prompt variant needs both points");
    push((*payload.object_point)[0], (*payload.object_point)[1], kRoleObject, kTypePoint);
    push((*payload.target_point)[0], (*payload.target_point)[1], kRoleTarget, kTypePoint);
  }
  if (dataset::uses_rendered_frame(v) && !payload.rendered_frame) {
    throw ContractError("vision prompt variant needs a rendered first frame");
  }
  Tensor base;
  if (!feats.empty()) {
    base = mlp("prompt.mlp", Tensor::from({roles.size(), 4 * f}, std::move(feats)));
  } else {
    roles = {kRoleObject, kRoleTarget};
    types = {kTypeNull, kTypeNull};
    base = ad::embedding_lookup(param("prompt.null"), {0, 1});
  }
  return ad::add(ad::add(base, ad::embedding_lookup(param("prompt.role"), roles)),
                 ad::embedding_lookup(param("prompt.type"), types));
}

Tensor SpotModel::task_encode(const ImageTokens& first, const Tensor& prompts, AttentionTrace* trace) const {
  const Tensor memory = norm("task.memory_ln", ad::concat({first.summary, first.patches}, 0));
  Tensor x = prompts;
  for (std::size_t l = 0; l < config_.fusion_layers; ++l) {
    x = block("task.layer" + std::to_string(l), x, memory, config_.fusion_heads, trace);
  }
  return ad::concat({first.summary, x}, 0);
}

Tensor SpotModel::encode_history(const Tensor& history) const {
  if (config_.history == 0) {
    if (history.defined()) throw DimensionError("history must be empty when K = 0");
    return {};
  }
  if (history.rank() != 2 || history.dim(1) != 10 || history.dim(0) != config_.history) {
    throw DimensionError("history must be " + std::to_string(config_.history) + "x10, got " +
                         ad::shape_str(history.shape()));
  }
  const Tensor h = ad::add(mlp("history.mlp", history), param("history.pos"));
  return ad::add(h, row(param("condition.type"), kComponentHistory));
}

ConditionTokens SpotModel::assemble_condition(const Tensor& task, const ImageTokens& current,
                                              const Tensor& history) const {
  const Tensor& types = param("condition.type");
  ConditionTokens out;
  std::vector<Tensor> parts{ad::add(task, row(types, kComponentTask)),
                            ad::add(ad::concat({current.summary, current.patches}, 0), row(types, kComponentFrame))};
  out.task = task.dim(0);
  out.frame = current.patches.dim(0) + 1;
  if (history.defined()) {
    parts.push_back(history);
    out.history = history.dim(0);
  }
  out.tokens = ad::concat(parts, 0);
  return out;
}

Tensor SpotModel::time_embed(double t) const {
  const auto feats = time_features(t, config_.time_freqs);
  return mlp("time.mlp", Tensor::from({1, feats.size()}, feats));
}

const Raster& SpotModel::task_frame(const ModelInput& input) const {
  if (dataset::uses_rendered_frame(config_.variant)) {
    if (!input.prompt.rendered_frame) throw ContractError("vision prompt variant needs a rendered first frame");
    return *input.prompt.rendered_frame;
  }
  if (!input.first_frame) throw ContractError("model input has no first frame");
  return *input.first_frame;
}

ConditionTokens SpotModel::condition(const ModelInput& input, ProjectionCache* cache, AttentionTrace* trace) const {
  if (!input.current_frame) throw ContractError("model input has no current frame");
  const ImageTokens first = image_tokens(task_frame(input), cache, trace);
  const ImageTokens current = image_tokens(*input.current_frame, cache, trace);
  const Tensor task = task_encode(first, encode_prompts(input.prompt), trace);
  if (input.history.size() != config_.history * 10) {
    throw DimensionError("history has " + std::to_string(input.history.size()) + " values, expected " +
                         std::to_string(config_.history * 10));
  }
  Tensor hist;
  if (config_.history > 0) hist = encode_history(Tensor::from({config_.history, 10}, input.history));
  return assemble_condition(task, current, hist);
}

Tensor SpotModel::decode(const Tensor& x, const Tensor& temb, const ConditionTokens& cond,
                         AttentionTrace* trace) const {
  if (x.rank() != 2 || x.dim(0) != config_.horizon || x.dim(1) != 10) {
    throw DimensionError("trajectory input must be " + std::to_string(config_.horizon) + "x10, got " +
                         ad::shape_str(x.shape()));
  }
  const Tensor memory = norm("decoder.memory_ln", cond.tokens);
  Tensor h = ad::add(ad::add(linear("decoder.in", x), param("decoder.pos")), temb);
  for (std::size_t l = 0; l < config_.decoder_layers; ++l) {
    h = block("decoder.layer" + std::to_string(l), h, memory, config_.decoder_heads, trace);
  }
  return linear("decoder.out", norm("decoder.out_ln", h));
}

Tensor SpotModel::velocity_forward(const Tensor& x, double t, const ConditionTokens& cond,
                                   AttentionTrace* trace) const {
  if (!std::isfinite(t)) throw NumericError("velocity_forward: non-finite time");
  for (double v : x.values()) {
    if (!std::isfinite(v)) throw NumericError("velocity_forward: non-finite input");
  }
  return decode(x, time_embed(t), cond, trace);
}

Tensor SpotModel::diffusion_forward(const Tensor& x, std::size_t k, const ConditionTokens& cond,
                                    AttentionTrace* trace) const {
  if (k >= config_.diffusion_steps) {
    throw ContractError("timestep " + std::to_string(k) + " outside [0, " + std::to_string(config_.diffusion_steps) +
                        ")");
  }
  for (double v : x.values()) {
    if (!std::isfinite(v)) throw NumericError("diffusion_forward: non-finite input");
  }
  return decode(x, time_embed(static_cast<double>(k) / static_cast<double>(config_.diffusion_steps)), cond, trace);
}

}  // namespace spot::model
