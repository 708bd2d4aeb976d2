#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "spot/ad/tensor.hpp"
#include "spot/common/rng.hpp"

namespace spot::train {

inline constexpr double kFlowAlpha = 1.5;
inline constexpr double kFlowTimeMin = 0.001;

// Beta(1.5, 1) by inverse CDF u^(1/1.5), then 0.999 t + 0.001.
double flow_time_from_uniform(double u);
double sample_flow_time(Rng& rng);

using VelocityFn = std::function<ad::Tensor(const ad::Tensor& x, double t)>;
using NoiseFn = std::function<ad::Tensor(const ad::Tensor& x, std::size_t k)>;

// x_t = (1 - t) x0 + t eps
ad::Tensor flow_interpolate(const ad::Tensor& x0, const ad::Tensor& eps, double t);
// mean((v(x_t, t) - (eps - x0))^2)
ad::Tensor flow_loss(const VelocityFn& velocity, const ad::Tensor& x0, const ad::Tensor& eps, double t);

// Squared-cosine schedule with betas capped at 0.999. Index k in [0, K).
struct DdpmSchedule {
  std::vector<double> betas;
  std::vector<double> alphas;
  std::vector<double> alpha_bars;

  static DdpmSchedule make(std::size_t steps);
  std::size_t steps() const { return betas.size(); }
};

// Continuous squared-cosine curve cos^2(((s / K) + 0.008) / 1.008 * pi / 2) at s / K = u.
double cosine_alpha_bar(double u);

// x_k = sqrt(abar_k) x0 + sqrt(1 - abar_k) eps
ad::Tensor ddpm_noise(const DdpmSchedule& s, const ad::Tensor& x0, const ad::Tensor& eps, std::size_t k);
// mean((eps_hat(x_k, k) - eps)^2)
ad::Tensor ddpm_loss(const NoiseFn& noise, const DdpmSchedule& s, const ad::Tensor& x0, const ad::Tensor& eps,
                     std::size_t k);

// Standard normal values of the given shape from `seed`.
ad::Tensor gaussian_tensor(const ad::Shape& shape, Rng& rng);
ad::Tensor initial_noise(const ad::Shape& shape, std::uint64_t seed);

}  // namespace spot::train
