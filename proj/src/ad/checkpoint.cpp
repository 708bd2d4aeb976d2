#include "spot/ad/checkpoint.hpp"

#include <algorithm>

#include "spot/common/array_io.hpp"
#include "spot/common/error.hpp"

namespace spot::ad {
namespace {

constexpr std::uint32_t kVersion = 1;

void put_string(std::string& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out += s;
}

}  // namespace

const CheckpointEntry* Checkpoint::find(const std::string& name) const {
  auto it = std::find_if(entries.begin(), entries.end(), [&](const auto& e) { return e.name == name; });
  return it == entries.end() ? nullptr : &*it;
}

void save_checkpoint(const std::filesystem::path& path, const ParameterList& params, const AdamW* optimizer,
                     const std::map<std::string, std::string>& metadata) {
  std::string out = "SPCK";
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(metadata.size()));
  for (const auto& [k, v] : metadata) {
    put_string(out, k);
    put_string(out, v);
  }
  const AdamWConfig cfg = optimizer ? optimizer->config() : AdamWConfig{};
  put_u64(out, optimizer ? optimizer->step_count() : 0);
  for (double x : {cfg.lr, cfg.beta1, cfg.beta2, cfg.eps, cfg.weight_decay}) put_f64(out, x);
  put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    put_string(out, p.name);
    put_u32(out, static_cast<std::uint32_t>(p.tensor.rank()));
    for (auto e : p.tensor.shape()) put_u64(out, e);
    const AdamW::Moments* mom = nullptr;
    if (optimizer) {
      auto it = optimizer->moments().find(p.name);
      if (it != optimizer->moments().end()) mom = &it->second;
    }
    put_u32(out, mom ? 1u : 0u);
    for (double v : p.tensor.values()) put_f64(out, v);
    if (mom) {
      for (double v : mom->m) put_f64(out, v);
      for (double v : mom->v) put_f64(out, v);
    }
  }
  write_file_atomic(path, out);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const std::string bytes = read_file_bytes(path);
  ByteReader r(bytes, path.string());
  if (r.bytes(4) != "SPCK") throw ParseError(path.string() + ": not a checkpoint file");
  if (r.u32() != kVersion) throw ParseError(path.string() + ": unsupported checkpoint version");
  Checkpoint ck;
  const auto n_meta = r.u32();
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    auto k = r.bytes(r.u32());
    ck.metadata[k] = r.bytes(r.u32());
  }
  ck.step = r.u64();
  ck.optimizer.lr = r.f64();
  ck.optimizer.beta1 = r.f64();
  ck.optimizer.beta2 = r.f64();
  ck.optimizer.eps = r.f64();
  ck.optimizer.weight_decay = r.f64();
  const auto n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) {
    CheckpointEntry e;
    e.name = r.bytes(r.u32());
    const auto rank = r.u32();
    for (std::uint32_t d = 0; d < rank; ++d) e.shape.push_back(r.u64());
    const auto flags = r.u32();
    const auto numel = shape_numel(e.shape);
    e.values.resize(numel);
    for (auto& v : e.values) v = r.f64();
    if (flags & 1u) {
      AdamW::Moments m;
      m.m.resize(numel);
      m.v.resize(numel);
      for (auto& v : m.m) v = r.f64();
      for (auto& v : m.v) v = r.f64();
      e.moments = std::move(m);
    }
    ck.entries.push_back(std::move(e));
  }
  if (!r.at_end()) throw ParseError(path.string() + ": trailing bytes in checkpoint");
  return ck;
}

void restore_parameters(const Checkpoint& ckpt, const ParameterList& params) {
  for (const auto& p : params) {
    const auto* e = ckpt.find(p.name);
    if (!e) throw ContractError("checkpoint has no parameter '" + p.name + "'");
    if (e->shape != p.tensor.shape()) {
      throw DimensionError("checkpoint parameter '" + p.name + "' has shape " + shape_str(e->shape) +
                           ", model expects " + shape_str(p.tensor.shape()));
    }
    Tensor t = p.tensor;
    std::copy(e->values.begin(), e->values.end(), t.mutable_values().begin());
  }
}

AdamW restore_optimizer(const Checkpoint& ckpt) {
  AdamW opt(ckpt.optimizer);
  std::map<std::string, AdamW::Moments> moments;
  for (const auto& e : ckpt.entries) {
    if (e.moments) moments[e.name] = *e.moments;
  }
  opt.restore(ckpt.step, std::move(moments));
  return opt;
}

}  // namespace spot::ad
