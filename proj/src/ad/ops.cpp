#include "spot/ad/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "spot/common/error.hpp"
#include "spot/simd/kernels.hpp"

namespace spot::ad {
namespace {

using detail::Node;

enum class Broadcast { kSame, kRow };

Broadcast broadcast_kind(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() == b.shape()) return Broadcast::kSame;
  const auto last = a.shape().back();
  if (b.numel() == last && b.rank() <= a.rank() && b.shape().back() == last) return Broadcast::kRow;
  throw DimensionError(std::string(op) + ": incompatible shapes " + shape_str(a.shape()) + " and " +
                       shape_str(b.shape()));
}

// Splits a shape around `axis` into (outer, extent, inner) for strided loops.
struct AxisView {
  std::size_t outer = 1, extent = 1, inner = 1;
};

AxisView axis_view(const Shape& shape, std::size_t axis, const char* op) {
  if (axis >= shape.size()) {
    throw DimensionError(std::string(op) + ": axis " + std::to_string(axis) + " invalid for shape " +
                         shape_str(shape));
  }
  AxisView v;
  for (std::size_t i = 0; i < axis; ++i) v.outer *= shape[i];
  v.extent = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) v.inner *= shape[i];
  return v;
}

bool wants_grad(const Node& n, std::size_t i) { return n.parents[i]->requires_grad; }

template <typename Fwd, typename GradA, typename GradB>
Tensor binary(const Tensor& a, const Tensor& b, const char* op, Fwd fwd, GradA ga, GradB gb) {
  const auto kind = broadcast_kind(a, b, op);
  const auto n = a.numel();
  const auto bn = b.numel();
  std::vector<double> out(n);
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t i = 0; i < n; ++i) out[i] = fwd(av[i], bv[kind == Broadcast::kSame ? i : i % bn]);
  return make_op_result(a.shape(), std::move(out), op, {a, b}, [kind, ga, gb](Node& self) {
    const auto& g = self.grad;
    const auto& x = self.parents[0]->value;
    const auto& y = self.parents[1]->value;
    const auto bn = y.size();
    if (wants_grad(self, 0)) {
      auto& gx = self.parents[0]->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * ga(x[i], y[kind == Broadcast::kSame ? i : i % bn]);
    }
    if (wants_grad(self, 1)) {
      auto& gy = self.parents[1]->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) {
        const auto j = kind == Broadcast::kSame ? i : i % bn;
        gy[j] += g[i] * gb(x[i], y[j]);
      }
    }
  });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, "add", [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
      [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, "sub", [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
      [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, "mul", [](double x, double y) { return x * y; }, [](double, double y) { return y; },
      [](double x, double) { return x; });
}

Tensor scale(const Tensor& a, double s) {
  std::vector<double> out(a.values().begin(), a.values().end());
  for (double& v : out) v *= s;
  return make_op_result(a.shape(), std::move(out), "scale", {a}, [s](Node& self) {
    auto& gx = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += s * self.grad[i];
  });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw DimensionError("matmul: incompatible shapes " + shape_str(a.shape()) + " and " + shape_str(b.shape()));
  }
  const auto m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<double> out(m * n, 0.0);
  simd::active().gemm_nn(m, n, k, a.values().data(), b.values().data(), out.data());
  return make_op_result({m, n}, std::move(out), "matmul", {a, b}, [m, k, n](Node& self) {
    const auto& kern = simd::active();
    if (wants_grad(self, 0)) {
      // dA = dC * B^T
      kern.gemm_nt(m, k, n, self.grad.data(), self.parents[1]->value.data(),
                   self.parents[0]->grad_buffer().data());
    }
    if (wants_grad(self, 1)) {
      // dB = A^T * dC
      kern.gemm_tn(k, n, m, self.parents[0]->value.data(), self.grad.data(),
                   self.parents[1]->grad_buffer().data());
    }
  });
}

Tensor transpose(const Tensor& a) {
  if (a.rank() != 2) throw DimensionError("transpose: expected rank 2, got " + shape_str(a.shape()));
  const auto r = a.dim(0), c = a.dim(1);
  std::vector<double> out(r * c);
  const auto av = a.values();
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = av[i * c + j];
  }
  return make_op_result({c, r}, std::move(out), "transpose", {a}, [r, c](Node& self) {
    auto& gx = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < c; ++j) gx[i * c + j] += self.grad[j * r + i];
    }
  });
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) throw ContractError("concat: no inputs");
  const Shape& ref = parts.front().shape();
  if (axis >= ref.size()) throw DimensionError("concat: axis " + std::to_string(axis) + " invalid for " + shape_str(ref));
  Shape out_shape = ref;
  out_shape[axis] = 0;
  for (const auto& p : parts) {
    bool ok = p.rank() == ref.size();
    for (std::size_t i = 0; ok && i < ref.size(); ++i) ok = i == axis || p.shape()[i] == ref[i];
    if (!ok) throw DimensionError("concat: incompatible shapes " + shape_str(ref) + " and " + shape_str(p.shape()));
    out_shape[axis] += p.shape()[axis];
  }
  const auto view = axis_view(out_shape, axis, "concat");
  std::vector<double> out(shape_numel(out_shape));
  std::vector<std::size_t> offsets;  // start along axis, per part
  std::size_t off = 0;
  for (const auto& p : parts) {
    offsets.push_back(off);
    const auto ext = p.shape()[axis];
    const auto pv = p.values();
    for (std::size_t o = 0; o < view.outer; ++o) {
      std::copy_n(pv.begin() + static_cast<std::ptrdiff_t>(o * ext * view.inner), ext * view.inner,
                  out.begin() + static_cast<std::ptrdiff_t>((o * view.extent + off) * view.inner));
    }
    off += ext;
  }
  return make_op_result(out_shape, std::move(out), "concat", parts, [view, offsets, axis](Node& self) {
    for (std::size_t k = 0; k < self.parents.size(); ++k) {
      if (!wants_grad(self, k)) continue;
      auto& gp = self.parents[k]->grad_buffer();
      const auto ext = self.parents[k]->shape[axis];
      for (std::size_t o = 0; o < view.outer; ++o) {
        const double* src = self.grad.data() + (o * view.extent + offsets[k]) * view.inner;
        double* dst = gp.data() + o * ext * view.inner;
        for (std::size_t i = 0; i < ext * view.inner; ++i) dst[i] += src[i];
      }
    }
  });
}

Tensor slice(const Tensor& a, std::size_t axis, std::size_t begin, std::size_t end) {
  const auto view = axis_view(a.shape(), axis, "slice");
  if (begin >= end || end > view.extent) {
    throw DimensionError("slice: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") invalid for axis " + std::to_string(axis) + " of " + shape_str(a.shape()));
  }
  Shape out_shape = a.shape();
  const auto ext = end - begin;
  out_shape[axis] = ext;
  std::vector<double> out(shape_numel(out_shape));
  const auto av = a.values();
  for (std::size_t o = 0; o < view.outer; ++o) {
    std::copy_n(av.begin() + static_cast<std::ptrdiff_t>((o * view.extent + begin) * view.inner), ext * view.inner,
                out.begin() + static_cast<std::ptrdiff_t>(o * ext * view.inner));
  }
  return make_op_result(out_shape, std::move(out), "slice", {a}, [view, begin, ext](Node& self) {
    auto& gx = self.parents[0]->grad_buffer();
    for (std::size_t o = 0; o < view.outer; ++o) {
      const double* src = self.grad.data() + o * ext * view.inner;
      double* dst = gx.data() + (o * view.extent + begin) * view.inner;
      for (std::size_t i = 0; i < ext * view.inner; ++i) dst[i] += src[i];
    }
  });
}

Tensor softmax(const Tensor& a, std::size_t axis) {
  const auto v = axis_view(a.shape(), axis, "softmax");
  const auto av = a.values();
  std::vector<double> out(a.numel());
  for (std::size_t o = 0; o < v.outer; ++o) {
    for (std::size_t in = 0; in < v.inner; ++in) {
      const std::size_t base = o * v.extent * v.inner + in;
      double mx = av[base];
      for (std::size_t i = 1; i < v.extent; ++i) mx = std::max(mx, av[base + i * v.inner]);
      double sum = 0.0;
      for (std::size_t i = 0; i < v.extent; ++i) {
        const double e = std::exp(av[base + i * v.inner] - mx);
        out[base + i * v.inner] = e;
        sum += e;
      }
      for (std::size_t i = 0; i < v.extent; ++i) out[base + i * v.inner] /= sum;
    }
  }
  return make_op_result(a.shape(), std::move(out), "softmax", {a}, [v](Node& self) {
    auto& gx = self.parents[0]->grad_buffer();
    const auto& y = self.value;
    const auto& g = self.grad;
    for (std::size_t o = 0; o < v.outer; ++o) {
      for (std::size_t in = 0; in < v.inner; ++in) {
        const std::size_t base = o * v.extent * v.inner + in;
        double dotp = 0.0;
        for (std::size_t i = 0; i < v.extent; ++i) dotp += g[base + i * v.inner] * y[base + i * v.inner];
        for (std::size_t i = 0; i < v.extent; ++i) {
          const auto idx = base + i * v.inner;
          gx[idx] += y[idx] * (g[idx] - dotp);
        }
      }
    }
  });
}

Tensor layer_norm(const Tensor& a, std::size_t axis, double eps) {
  const auto v = axis_view(a.shape(), axis, "layer_norm");
  const auto av = a.values();
  std::vector<double> out(a.numel());
  // Per-group inverse std, kept for backward.
  std::vector<double> inv_std(v.outer * v.inner);
  const double n = static_cast<double>(v.extent);
  for (std::size_t o = 0; o < v.outer; ++o) {
    for (std::size_t in = 0; in < v.inner; ++in) {
      const std::size_t base = o * v.extent * v.inner + in;
      double mean = 0.0;
      for (std::size_t i = 0; i < v.extent; ++i) mean += av[base + i * v.inner];
      mean /= n;
      double var = 0.0;
      for (std::size_t i = 0; i < v.extent; ++i) {
        const double d = av[base + i * v.inner] - mean;
        var += d * d;
      }
      var /= n;
      const double is = 1.0 / std::sqrt(var + eps);
      inv_std[o * v.inner + in] = is;
      for (std::size_t i = 0; i < v.extent; ++i) out[base + i * v.inner] = (av[base + i * v.inner] - mean) * is;
    }
  }
  return make_op_result(a.shape(), std::move(out), "layer_norm", {a}, [v, inv_std = std::move(inv_std)](Node& self) {
    auto& gx = self.parents[0]->grad_buffer();
    const auto& xhat = self.value;
    const auto& g = self.grad;
    const double n = static_cast<double>(v.extent);
    for (std::size_t o = 0; o < v.outer; ++o) {
      for (std::size_t in = 0; in < v.inner; ++in) {
        const std::size_t base = o * v.extent * v.inner + in;
        double mg = 0.0, mgx = 0.0;
        for (std::size_t i = 0; i < v.extent; ++i) {
          const auto idx = base + i * v.inner;
          mg += g[idx];
          mgx += g[idx] * xhat[idx];
        }
        mg /= n;
        mgx /= n;
        const double is = inv_std[o * v.inner + in];
        for (std::size_t i = 0; i < v.extent; ++i) {
          const auto idx = base + i * v.inner;
          gx[idx] += is * (g[idx] - mg - xhat[idx] * mgx);
        }
      }
    }
  });
}

Tensor gelu(const Tensor& a) {
  const auto av = a.values();
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double x = av[i];
    out[i] = 0.5 * x * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0));
  }
  return make_op_result(a.shape(), std::move(out), "gelu", {a}, [](Node& self) {
    auto& gx = self.parents[0]->grad_buffer();
    const auto& x = self.parents[0]->value;
    constexpr double kInvSqrt2Pi = 0.3989422804014327;
    for (std::size_t i = 0; i < gx.size(); ++i) {
      const double cdf = 0.5 * (1.0 + std::erf(x[i] * std::numbers::sqrt2 / 2.0));
      const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x[i] * x[i]);
      gx[i] += self.grad[i] * (cdf + x[i] * pdf);
    }
  });
}

Tensor embedding_lookup(const Tensor& table, const std::vector<std::size_t>& indices) {
  if (table.rank() != 2) throw DimensionError("embedding_lookup: table must be rank 2, got " + shape_str(table.shape()));
  if (indices.empty()) throw ContractError("embedding_lookup: empty index list");
  const auto rows = table.dim(0), d = table.dim(1);
  std::vector<double> out(indices.size() * d);
  const auto tv = table.values();
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= rows) {
      throw DimensionError("embedding_lookup: index " + std::to_string(indices[i]) + " out of range for table " +
                           shape_str(table.shape()));
    }
    std::copy_n(tv.begin() + static_cast<std::ptrdiff_t>(indices[i] * d), d,
                out.begin() + static_cast<std::ptrdiff_t>(i * d));
  }
  return make_op_result({indices.size(), d}, std::move(out), "embedding_lookup", {table}, [indices, d](Node& self) {
    auto& gt = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < indices.size(); ++i) {
      for (std::size_t j = 0; j < d; ++j) gt[indices[i] * d + j] += self.grad[i * d + j];
    }
  });
}

Tensor mse_mean(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError("mse_mean: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  const auto av = a.values();
  const auto bv = b.values();
  double s = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) {
    const double d = av[i] - bv[i];
    s += d * d;
  }
  const double n = static_cast<double>(av.size());
  return make_op_result({1}, {s / n}, "mse_mean", {a, b}, [n](Node& self) {
    const auto& x = self.parents[0]->value;
    const auto& y = self.parents[1]->value;
    const double g = self.grad[0] * 2.0 / n;
    if (wants_grad(self, 0)) {
      auto& gx = self.parents[0]->grad_buffer();
      for (std::size_t i = 0; i < x.size(); ++i) gx[i] += g * (x[i] - y[i]);
    }
    if (wants_grad(self, 1)) {
      auto& gy = self.parents[1]->grad_buffer();
      for (std::size_t i = 0; i < x.size(); ++i) gy[i] -= g * (x[i] - y[i]);
    }
  });
}

}  // namespace spot::ad
