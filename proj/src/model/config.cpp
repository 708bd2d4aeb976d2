#include "spot/model/config.hpp"

#include <map>

#include "spot/common/error.hpp"

namespace spot::model {

HeadKind parse_head(const std::string& name) {
  if (name == "flow") return HeadKind::kFlow;
  if (name == "diffusion") return HeadKind::kDiffusion;
  throw ConfigError("unknown head kind '" + name + "' (expected flow|diffusion)");
}

std::string head_name(HeadKind h) { return h == HeadKind::kFlow ? "flow" : "diffusion"; }

std::size_t ModelConfig::prompt_tokens() const { return dataset::uses_box_coords(variant) ? 4 : 2; }

namespace {

template <typename Config>
auto size_fields(Config& c) {
  return std::map<std::string, decltype(&c.d_model)>{
      {"d_model", &c.d_model},
      {"patch", &c.patch},
      {"image_width", &c.image_width},
      {"image_height", &c.image_height},
      {"fusion_layers", &c.fusion_layers},
      {"fusion_heads", &c.fusion_heads},
      {"decoder_layers", &c.decoder_layers},
      {"decoder_heads", &c.decoder_heads},
      {"history", &c.history},
      {"horizon", &c.horizon},
      {"fourier_freqs", &c.fourier_freqs},
      {"mlp_ratio", &c.mlp_ratio},
      {"time_freqs", &c.time_freqs},
      {"diffusion_steps", &c.diffusion_steps},
  };
}

}  // namespace

void ModelConfig::validate() const {
  auto need = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError("model config: " + msg);
  };
  need(d_model > 0, "d_model must be positive");
  need(fusion_heads > 0 && d_model % fusion_heads == 0, "d_model must be divisible by fusion_heads");
  need(decoder_heads > 0 && d_model % decoder_heads == 0, "d_model must be divisible by decoder_heads");
  need(patch > 0 && image_width % patch == 0 && image_height % patch == 0,
       "image size must be divisible by patch");
  need(image_width > 0 && image_height > 0, "image size must be positive");
  need(horizon >= 1, "horizon must be >= 1");
  need(fourier_freqs >= 1, "fourier_freqs must be >= 1");
  need(mlp_ratio >= 1, "mlp_ratio must be >= 1");
  need(time_freqs >= 2, "time_freqs must be >= 2");
  need(diffusion_steps >= 2, "diffusion_steps must be >= 2");
}

ModelConfig ModelConfig::from_kv(const KvConfig& kv) {
  ModelConfig c;
  auto fields = size_fields(c);
  for (const auto& key : kv.keys()) {
    if (auto it = fields.find(key); it != fields.end()) {
      const long long v = kv.get_int(key, 0);
      if (v < 0) throw ConfigError("model config: '" + key + "' must be non-negative");
      *it->second = static_cast<std::size_t>(v);
    } else if (key == "head") {
      c.head = parse_head(*kv.get(key));
    } else if (key == "variant") {
      c.variant = dataset::parse_variant(*kv.get(key));
    } else {
      throw ConfigError("model config: unknown key '" + key + "'");
    }
  }
  c.validate();
  return c;
}

ModelConfig ModelConfig::load(const std::filesystem::path& path) { return from_kv(KvConfig::load(path)); }

KvConfig ModelConfig::to_kv() const {
  KvConfig kv;
  ModelConfig copy = *this;
  for (const auto& [key, ptr] : size_fields(copy)) kv.set(key, std::to_string(*ptr));
  kv.set("head", head_name(head));
  kv.set("variant", dataset::variant_name(variant));
  return kv;
}

void ModelConfig::save(const std::filesystem::path& path) const { to_kv().save(path); }

}  // namespace spot::model
