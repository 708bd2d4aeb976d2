#pragma once

#include "spot/ad/tensor.hpp"
#include "spot/common/rng.hpp"

namespace spot::ad {

// Weight of shape [fan_in, fan_out], uniform in +-1/sqrt(fan_in).
Tensor init_linear_weight(std::size_t fan_in, std::size_t fan_out, Rng& rng);
Tensor init_zeros(Shape shape);
Tensor init_ones(Shape shape);
// N(0, stddev^2) entries, the default for embeddings and learned tokens.
Tensor init_normal(Shape shape, Rng& rng, double stddev = 0.02);

}  // namespace spot::ad
