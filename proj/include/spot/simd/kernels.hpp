#pragma once

#include <cstddef>
#include <string_view>

// Dense double-precision inner loops used by the autodiff core. Every kernel
// has a scalar reference implementation; SIMD variants are selected once at
// startup from the CPU's capabilities (override with SPOT_SIMD=scalar|avx2).
namespace spot::simd {

enum class Isa { kScalar, kAvx2 };

struct Kernels {
  Isa isa;
  std::string_view name;

  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // C[m x n] += A[m x k] * B[k x n], all row-major and densely packed.
  void (*gemm_nn)(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c);
  // C[m x n] += A[m x k] * B[n x k]^T
  void (*gemm_nt)(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c);
  // C[m x n] += A[k x m]^T * B[k x n]
  void (*gemm_tn)(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c);
};

const Kernels& scalar_kernels();
// nullptr when the build did not include the variant.
const Kernels* avx2_kernels();

bool cpu_supports(Isa isa);

// The table used by the tensor ops.
const Kernels& active();
// Switches the active table. Throws ContractError if the ISA is unavailable.
void select(Isa isa);

}  // namespace spot::simd
