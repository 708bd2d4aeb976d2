#include "spot/ad/optim.hpp"

#include <cmath>

#include "spot/common/error.hpp"

namespace spot::ad {

void AdamW::step(const ParameterList& params) {
  for (const auto& p : params) {
    if (!p.tensor.has_grad()) throw ContractError("adamw_step: parameter '" + p.name + "' has no grad");
  }
  ++step_;
  const double t = static_cast<double>(step_);
  const double bc1 = 1.0 - std::pow(config_.beta1, t);
  const double bc2 = 1.0 - std::pow(config_.beta2, t);
  for (const auto& p : params) {
    Tensor param = p.tensor;
    auto values = param.mutable_values();
    const auto grad = param.grad();
    auto& mom = moments_[p.name];
    if (mom.m.empty()) {
      mom.m.assign(values.size(), 0.0);
      mom.v.assign(values.size(), 0.0);
    } else if (mom.m.size() != values.size()) {
      throw ContractError("adamw_step: moment size mismatch for '" + p.name + "'");
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double g = grad[i];
      values[i] -= config_.lr * config_.weight_decay * values[i];
      mom.m[i] = config_.beta1 * mom.m[i] + (1.0 - config_.beta1) * g;
      mom.v[i] = config_.beta2 * mom.v[i] + (1.0 - config_.beta2) * g * g;
      const double mhat = mom.m[i] / bc1;
      const double vhat = mom.v[i] / bc2;
      values[i] -= config_.lr * mhat / (std::sqrt(vhat) + config_.eps);
    }
  }
}

void AdamW::restore(std::uint64_t step, std::map<std::string, Moments> moments) {
  step_ = step;
  moments_ = std::move(moments);
}

double global_grad_norm(const ParameterList& params) {
  double sq = 0.0;
  for (const auto& p : params) {
    for (double g : p.tensor.grad()) sq += g * g;
  }
  return std::sqrt(sq);
}

double clip_grad_norm(const ParameterList& params, double max_norm) {
  if (!(max_norm > 0.0)) throw ContractError("clip_grad_norm: max_norm must be positive");
  for (const auto& p : params) {
    if (!p.tensor.has_grad()) throw ContractError("clip_grad_norm: parameter '" + p.name + "' has no grad");
  }
  const double norm = global_grad_norm(params);
  if (norm > max_norm) {
    const double s = max_norm / norm;
    for (const auto& p : params) {
      Tensor t = p.tensor;
      for (double& g : t.mutable_grad()) g *= s;
    }
  }
  return norm;
}

void zero_grads(const ParameterList& params) {
  for (const auto& p : params) {
    Tensor t = p.tensor;
    t.zero_grad();
  }
}

void clear_grads(const ParameterList& params) {
  for (const auto& p : params) {
    Tensor t = p.tensor;
    t.clear_grad();
  }
}

}  // namespace spot::ad
