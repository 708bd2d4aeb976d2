// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include <immintrin.h>

#include <vector>

#include "kernels_internal.hpp"

namespace spot::simd::detail {
namespace {

double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

// 4x8 register tile: rows i0..i0+3 of C, columns j0..j0+7.
inline void tile_4x8(std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
  double* c0 = c;
  double* c1 = c + n;
  double* c2 = c + 2 * n;
  double* c3 = c + 3 * n;
  __m256d r00 = _mm256_loadu_pd(c0), r01 = _mm256_loadu_pd(c0 + 4);
  __m256d r10 = _mm256_loadu_pd(c1), r11 = _mm256_loadu_pd(c1 + 4);
  __m256d r20 = _mm256_loadu_pd(c2), r21 = _mm256_loadu_pd(c2 + 4);
  __m256d r30 = _mm256_loadu_pd(c3), r31 = _mm256_loadu_pd(c3 + 4);
  for (std::size_t p = 0; p < k; ++p) {
    const __m256d b0 = _mm256_loadu_pd(b + p * n);
    const __m256d b1 = _mm256_loadu_pd(b + p * n + 4);
    __m256d av = _mm256_broadcast_sd(a + p);
    r00 = _mm256_fmadd_pd(av, b0, r00);
    r01 = _mm256_fmadd_pd(av, b1, r01);
    av = _mm256_broadcast_sd(a + k + p);
    r10 = _mm256_fmadd_pd(av, b0, r10);
    r11 = _mm256_fmadd_pd(av, b1, r11);
    av = _mm256_broadcast_sd(a + 2 * k + p);
    r20 = _mm256_fmadd_pd(av, b0, r20);
    r21 = _mm256_fmadd_pd(av, b1, r21);
    av = _mm256_broadcast_sd(a + 3 * k + p);
    r30 = _mm256_fmadd_pd(av, b0, r30);
    r31 = _mm256_fmadd_pd(av, b1, r31);
  }
  _mm256_storeu_pd(c0, r00);
  _mm256_storeu_pd(c0 + 4, r01);
  _mm256_storeu_pd(c1, r10);
  _mm256_storeu_pd(c1 + 4, r11);
  _mm256_storeu_pd(c2, r20);
  _mm256_storeu_pd(c2 + 4, r21);
  _mm256_storeu_pd(c3, r30);
  _mm256_storeu_pd(c3 + 4, r31);
}

// One row of C over columns [j0, j1), vectorised by 4 with a scalar tail.
inline void row_strip(std::size_t n, std::size_t k, std::size_t j0, std::size_t j1, const double* arow,
                      const double* b, double* crow) {
  std::size_t j = j0;
  for (; j + 4 <= j1; j += 4) {
    __m256d acc = _mm256_loadu_pd(crow + j);
    for (std::size_t p = 0; p < k; ++p) {
      acc = _mm256_fmadd_pd(_mm256_broadcast_sd(arow + p), _mm256_loadu_pd(b + p * n + j), acc);
    }
    _mm256_storeu_pd(crow + j, acc);
  }
  for (; j < j1; ++j) {
    double s = crow[j];
    for (std::size_t p = 0; p < k; ++p) s += arow[p] * b[p * n + j];
    crow[j] = s;
  }
}

void gemm_nn_avx2(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
  const std::size_t n8 = n - n % 8;
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    for (std::size_t j = 0; j < n8; j += 8) tile_4x8(n, k, a + i * k, b + j, c + i * n + j);
    if (n8 < n) {
      for (std::size_t r = 0; r < 4; ++r) row_strip(n, k, n8, n, a + (i + r) * k, b, c + (i + r) * n);
    }
  }
  for (; i < m; ++i) row_strip(n, k, 0, n, a + i * k, b, c + i * n);
}

void transpose_into(std::vector<double>& dst, const double* src, std::size_t rows, std::size_t cols) {
  dst.resize(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t q = 0; q < cols; ++q) dst[q * rows + r] = src[r * cols + q];
  }
}

void gemm_nt_avx2(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
  if (n < 4) {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) c[i * n + j] += dot_avx2(a + i * k, b + j * k, k);
    }
    return;
  }
  thread_local std::vector<double> bt;
  transpose_into(bt, b, n, k);  // bt is k x n
  gemm_nn_avx2(m, n, k, a, bt.data(), c);
}

void gemm_tn_avx2(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
  thread_local std::vector<double> at;
  transpose_into(at, a, k, m);  // at is m x k
  gemm_nn_avx2(m, n, k, at.data(), b, c);
}

}  // namespace

const Kernels kAvx2Kernels{
    Isa::kAvx2, "avx2", &dot_avx2, &axpy_avx2, &gemm_nn_avx2, &gemm_nt_avx2, &gemm_tn_avx2,
};

}  // namespace spot::simd::detail
