#pragma once

#include <cstddef>
#include <vector>

#include "spot/ad/tensor.hpp"

namespace spot::ad {

// Elementwise binary ops. `b` either matches `a`'s shape or is a row vector
// whose length equals `a`'s last extent (broadcast over leading axes).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);

// [m, k] x [k, n] -> [m, n]
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
// Half-open range [begin, end) along `axis`.
Tensor slice(const Tensor& a, std::size_t axis, std::size_t begin, std::size_t end);

Tensor softmax(const Tensor& a, std::size_t axis);
Tensor layer_norm(const Tensor& a, std::size_t axis, double eps = 1e-5);
// Exact erf form.
Tensor gelu(const Tensor& a);

// table [V, D], rows picked by index -> [indices.size(), D]
Tensor embedding_lookup(const Tensor& table, const std::vector<std::size_t>& indices);

// mean((a - b)^2) as a [1] tensor.
Tensor mse_mean(const Tensor& a, const Tensor& b);

// Composite helpers built from the primitives above.
inline Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  return add(matmul(x, weight), bias);
}

}  // namespace spot::ad
