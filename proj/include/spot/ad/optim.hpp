#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "spot/ad/tensor.hpp"

namespace spot::ad {

struct NamedParameter {
  std::string name;
  Tensor tensor;
};
using ParameterList = std::vector<NamedParameter>;

struct AdamWConfig {
  double lr = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

// AdamW with decoupled weight decay. Moments are keyed by parameter name.
class AdamW {
 public:
  struct Moments {
    std::vector<double> m;
    std::vector<double> v;
  };

  explicit AdamW(AdamWConfig config = {}) : config_(config) {}

  // Requires every parameter to hold a grad; grads are left untouched.
  void step(const ParameterList& params);

  void set_lr(double lr) { config_.lr = lr; }
  const AdamWConfig& config() const { return config_; }
  std::uint64_t step_count() const { return step_; }
  const std::map<std::string, Moments>& moments() const { return moments_; }

  // Used when restoring from a checkpoint.
  void restore(std::uint64_t step, std::map<std::string, Moments> moments);

 private:
  AdamWConfig config_;
  std::uint64_t step_ = 0;
  std::map<std::string, Moments> moments_;
};

// Scales all grads so their global L2 norm is at most max_norm.
// Returns the norm before clipping.
double clip_grad_norm(const ParameterList& params, double max_norm);

double global_grad_norm(const ParameterList& params);
void zero_grads(const ParameterList& params);
void clear_grads(const ParameterList& params);

}  // namespace spot::ad
