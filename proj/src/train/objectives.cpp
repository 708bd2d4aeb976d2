#include "spot/train/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "spot/ad/ops.hpp"
#include "spot/common/error.hpp"

namespace spot::train {

using ad::Tensor;

double flow_time_from_uniform(double u) {
  if (!(u >= 0.0 && u <= 1.0)) throw ContractError("flow time: u must lie in [0, 1]");
  return (1.0 - kFlowTimeMin) * std::pow(u, 1.0 / kFlowAlpha) + kFlowTimeMin;
}

double sample_flow_time(Rng& rng) { return flow_time_from_uniform(uniform01(rng)); }

Tensor flow_interpolate(const Tensor& x0, const Tensor& eps, double t) {
  return ad::add(ad::scale(x0, 1.0 - t), ad::scale(eps, t));
}

Tensor flow_loss(const VelocityFn& velocity, const Tensor& x0, const Tensor& eps, double t) {
  if (x0.shape() != eps.shape()) throw DimensionError("flow_loss: x0 and eps shapes differ");
  const Tensor xt = flow_interpolate(x0, eps, t);
  return ad::mse_mean(velocity(xt, t), ad::sub(eps, x0));
}

double cosine_alpha_bar(double u) {
  const double c = std::cos((u + 0.008) / 1.008 * std::numbers::pi / 2.0);
  return c * c;
}

DdpmSchedule DdpmSchedule::make(std::size_t steps) {
  if (steps < 1) throw ConfigError("ddpm schedule needs at least one step");
  DdpmSchedule s;
  double abar = 1.0;
  for (std::size_t i = 0; i < steps; ++i) {
    const double t1 = static_cast<double>(i) / static_cast<double>(steps);
    const double t2 = static_cast<double>(i + 1) / static_cast<double>(steps);
    const double beta = std::min(1.0 - cosine_alpha_bar(t2) / cosine_alpha_bar(t1), 0.999);
    abar *= 1.0 - beta;
    s.betas.push_back(beta);
    s.alphas.push_back(1.0 - beta);
    s.alpha_bars.push_back(abar);
  }
  return s;
}

Tensor ddpm_noise(const DdpmSchedule& s, const Tensor& x0, const Tensor& eps, std::size_t k) {
  if (k >= s.steps()) throw ContractError("ddpm timestep out of range");
  const double a = s.alpha_bars[k];
  return ad::add(ad::scale(x0, std::sqrt(a)), ad::scale(eps, std::sqrt(1.0 - a)));
}

Tensor ddpm_loss(const NoiseFn& noise, const DdpmSchedule& s, const Tensor& x0, const Tensor& eps, std::size_t k) {
  if (x0.shape() != eps.shape()) throw DimensionError("ddpm_loss: x0 and eps shapes differ");
  return ad::mse_mean(noise(ddpm_noise(s, x0, eps, k), k), eps);
}

Tensor gaussian_tensor(const ad::Shape& shape, Rng& rng) {
  std::vector<double> v(ad::shape_numel(shape));
  for (auto& x : v) x = standard_normal(rng);
  return Tensor::from(shape, std::move(v));
}

Tensor initial_noise(const ad::Shape& shape, std::uint64_t seed) {
  Rng rng(combine_seed({seed, hash_string("initial_noise")}));
  return gaussian_tensor(shape, rng);
}

}  // namespace spot::train
