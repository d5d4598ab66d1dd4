#pragma once
// Dense double-precision kernels used by every matrix product in the library.
//
// Each kernel has a scalar reference implementation and, on x86-64, an
// AVX2+FMA variant compiled with a function-level target attribute. The
// variant is picked once at startup from CPUID; AUGSUM_SIMD=scalar forces the
// reference path. Both paths are checked against each other in
// tests/unit/test_kernels.cpp.

#include <cstddef>
#include <string_view>

namespace augsum::simd {

enum class Backend { kScalar, kAvx2 };

struct KernelTable {
  /// sum_i x[i] * y[i]
  double (*dot)(const double* x, const double* y, std::size_t n);
  /// y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  /// C(m x n) += A(m x k) * B(k x n), all row-major and densely packed.
  void (*gemm_nn)(std::size_t m, std::size_t n, std::size_t k, const double* a,
                  const double* b, double* c);
  /// C(m x n) += A(m x k) * B(n x k)^T
  void (*gemm_nt)(std::size_t m, std::size_t n, std::size_t k, const double* a,
                  const double* b, double* c);
  /// C(m x n) += A(k x m)^T * B(k x n)
  void (*gemm_tn)(std::size_t m, std::size_t n, std::size_t k, const double* a,
                  const double* b, double* c);
};

const KernelTable& scalar_kernels();
/// nullptr when the binary was built without AVX2 support.
const KernelTable* avx2_kernels();

bool backend_available(Backend backend);
Backend active_backend();
/// Switches the process-wide kernel table. Not thread-safe with respect to
/// concurrently running kernels; call before starting work.
void set_backend(Backend backend);
std::string_view backend_name(Backend backend);

const KernelTable& kernels();

}  // namespace augsum::simd
