#pragma once

#include <cstddef>
#include <cstdint>

#include "spot/train/objectives.hpp"

namespace spot::train {

// Uniform steps from t = 1 to t = 0: x <- x - dt * v(x, t).
ad::Tensor euler_integrate(const VelocityFn& velocity, ad::Tensor x1, std::size_t steps);
ad::Tensor euler_sample(const VelocityFn& velocity, const ad::Shape& shape, std::size_t steps, std::uint64_t seed);

// Evenly spaced subset of the K training timesteps, descending: k_i = i * (K / steps).
std::vector<std::size_t> ddim_timesteps(std::size_t train_steps, std::size_t steps);
// Deterministic DDIM (eta = 0). The last update uses abar = 1, returning the x0 estimate.
ad::Tensor ddim_integrate(const NoiseFn& noise, const DdpmSchedule& s, ad::Tensor xk, std::size_t steps);
ad::Tensor ddim_sample(const NoiseFn& noise, const DdpmSchedule& s, const ad::Shape& shape, std::size_t steps,
                       std::uint64_t seed);

}  // namespace spot::train
