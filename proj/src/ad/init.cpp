#include "spot/ad/init.hpp"

#include <cmath>

namespace spot::ad {

Tensor init_linear_weight(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> v(fan_in * fan_out);
  for (double& x : v) x = dist(rng);
  return Tensor::from({fan_in, fan_out}, std::move(v), true);
}

Tensor init_zeros(Shape shape) { return Tensor::zeros(std::move(shape), true); }

Tensor init_ones(Shape shape) { return Tensor::full(std::move(shape), 1.0, true); }

Tensor init_normal(Shape shape, Rng& rng, double stddev) {
  std::normal_distribution<double> dist(0.0, stddev);
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = dist(rng);
  return Tensor::from(std::move(shape), std::move(v), true);
}

}  // namespace spot::ad
