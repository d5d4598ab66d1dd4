#include "augsum/simd/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>
#define AUGSUM_HAVE_AVX2_KERNELS 1
#endif

namespace augsum::simd {

#if defined(AUGSUM_HAVE_AVX2_KERNELS)
namespace {

#define AUGSUM_AVX2 __attribute__((target("avx2,fma")))

AUGSUM_AVX2 double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d pair = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

AUGSUM_AVX2 double dot_avx2(const double* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4),
                           _mm256_loadu_pd(y + i + 4), acc1);
  }
  if (i + 4 <= n) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    i += 4;
  }
  double sum = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) sum += x[i] * y[i];
  return sum;
}

AUGSUM_AVX2 void axpy_avx2(double alpha, const double* x, double* y,
                           std::size_t n) {
  const __m256d a = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(
        y + i, _mm256_fmadd_pd(a, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

// Rows of C are updated four k-steps at a time so each C load/store is shared
// by four FMAs.
AUGSUM_AVX2 void gemm_nn_avx2(std::size_t m, std::size_t n, std::size_t k,
                              const double* a, const double* b, double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    double* c_row = c + i * n;
    const double* a_row = a + i * k;
    std::size_t p = 0;
    for (; p + 4 <= k; p += 4) {
      const __m256d a0 = _mm256_set1_pd(a_row[p]);
      const __m256d a1 = _mm256_set1_pd(a_row[p + 1]);
      const __m256d a2 = _mm256_set1_pd(a_row[p + 2]);
      const __m256d a3 = _mm256_set1_pd(a_row[p + 3]);
      const double* b0 = b + p * n;
      const double* b1 = b0 + n;
      const double* b2 = b1 + n;
      const double* b3 = b2 + n;
      std::size_t j = 0;
      for (; j + 4 <= n; j += 4) {
        __m256d acc = _mm256_loadu_pd(c_row + j);
        acc = _mm256_fmadd_pd(a0, _mm256_loadu_pd(b0 + j), acc);
        acc = _mm256_fmadd_pd(a1, _mm256_loadu_pd(b1 + j), acc);
        acc = _mm256_fmadd_pd(a2, _mm256_loadu_pd(b2 + j), acc);
        acc = _mm256_fmadd_pd(a3, _mm256_loadu_pd(b3 + j), acc);
        _mm256_storeu_pd(c_row + j, acc);
      }
      for (; j < n; ++j) {
        c_row[j] += a_row[p] * b0[j];
        c_row[j] += a_row[p + 1] * b1[j];
        c_row[j] += a_row[p + 2] * b2[j];
        c_row[j] += a_row[p + 3] * b3[j];
      }
    }
    for (; p < k; ++p) axpy_avx2(a_row[p], b + p * n, c_row, n);
  }
}

AUGSUM_AVX2 void gemm_nt_avx2(std::size_t m, std::size_t n, std::size_t k,
                              const double* a, const double* b, double* c) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      c[i * n + j] += dot_avx2(a + i * k, b + j * k, k);
}

AUGSUM_AVX2 void gemm_tn_avx2(std::size_t m, std::size_t n, std::size_t k,
                              const double* a, const double* b, double* c) {
  for (std::size_t p = 0; p < k; ++p) {
    const double* a_row = a + p * m;
    const double* b_row = b + p * n;
    for (std::size_t i = 0; i < m; ++i) axpy_avx2(a_row[i], b_row, c + i * n, n);
  }
}

#undef AUGSUM_AVX2

constexpr KernelTable kAvx2Table{dot_avx2, axpy_avx2, gemm_nn_avx2,
                                 gemm_nt_avx2, gemm_tn_avx2};

}  // namespace

const KernelTable* avx2_kernels() { return &kAvx2Table; }

#else

const KernelTable* avx2_kernels() { return nullptr; }

#endif

}  // namespace augsum::simd
