#include "augsum/simd/kernels.hpp"

namespace augsum::simd {
namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += x[i] * y[i];
  return sum;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void gemm_nn_scalar(std::size_t m, std::size_t n, std::size_t k,
                    const double* a, const double* b, double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    double* c_row = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      axpy_scalar(a[i * k + p], b + p * n, c_row, n);
    }
  }
}

void gemm_nt_scalar(std::size_t m, std::size_t n, std::size_t k,
                    const double* a, const double* b, double* c) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      c[i * n + j] += dot_scalar(a + i * k, b + j * k, k);
}

void gemm_tn_scalar(std::size_t m, std::size_t n, std::size_t k,
                    const double* a, const double* b, double* c) {
  for (std::size_t p = 0; p < k; ++p) {
    const double* a_row = a + p * m;
    const double* b_row = b + p * n;
    for (std::size_t i = 0; i < m; ++i)
      axpy_scalar(a_row[i], b_row, c + i * n, n);
  }
}

constexpr KernelTable kScalarTable{dot_scalar, axpy_scalar, gemm_nn_scalar,
                                   gemm_nt_scalar, gemm_tn_scalar};

}  // namespace

const KernelTable& scalar_kernels() { return kScalarTable; }

}  // namespace augsum::simd
