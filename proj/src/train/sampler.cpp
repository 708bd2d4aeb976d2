#include "spot/train/sampler.hpp"

#include <cmath>

#include "spot/ad/ops.hpp"
#include "spot/common/error.hpp"

namespace spot::train {

using ad::Tensor;

Tensor euler_integrate(const VelocityFn& velocity, Tensor x, std::size_t steps) {
  if (steps < 1) throw ConfigError("euler sampler needs at least one step");
  ad::NoGradGuard guard;
  const double dt = 1.0 / static_cast<double>(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    const double t = 1.0 - static_cast<double>(i) * dt;
    x = ad::sub(x, ad::scale(velocity(x, t), dt));
  }
  return x;
}

Tensor euler_sample(const VelocityFn& velocity, const ad::Shape& shape, std::size_t steps, std::uint64_t seed) {
  return euler_integrate(velocity, initial_noise(shape, seed), steps);
}

std::vector<std::size_t> ddim_timesteps(std::size_t train_steps, std::size_t steps) {
  if (steps < 1 || steps > train_steps) {
    throw ConfigError("ddim steps must lie in [1, " + std::to_string(train_steps) + "]");
  }
  const std::size_t gap = train_steps / steps;
  std::vector<std::size_t> out;
  for (std::size_t i = steps; i-- > 0;) out.push_back(i * gap);
  return out;
}

Tensor ddim_integrate(const NoiseFn& noise, const DdpmSchedule& s, Tensor x, std::size_t steps) {
  const auto ks = ddim_timesteps(s.steps(), steps);
  ad::NoGradGuard guard;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    const std::size_t k = ks[i];
    const double a = s.alpha_bars[k];
    const double a_prev = i + 1 < ks.size() ? s.alpha_bars[ks[i + 1]] : 1.0;
    const Tensor eps = noise(x, k);
    const Tensor x0 = ad::scale(ad::sub(x, ad::scale(eps, std::sqrt(1.0 - a))), 1.0 / std::sqrt(a));
    x = a_prev == 1.0 ? x0 : ad::add(ad::scale(x0, std::sqrt(a_prev)), ad::scale(eps, std::sqrt(1.0 - a_prev)));
  }
  return x;
}

Tensor ddim_sample(const NoiseFn& noise, const DdpmSchedule& s, const ad::Shape& shape, std::size_t steps,
                   std::uint64_t seed) {
  return ddim_integrate(noise, s, initial_noise(shape, seed), steps);
}

}  // namespace spot::train
