#include "augsum/matrix.hpp"

#include <cmath>

#include "augsum/simd/kernels.hpp"

namespace augsum {

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dims");
  Matrix c(a.rows(), b.cols());
  simd::kernels().gemm_nn(a.rows(), b.cols(), a.cols(), a.data(), b.data(),
                          c.data());
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw std::invalid_argument("matmul_nt: inner dims");
  Matrix c(a.rows(), b.rows());
  simd::kernels().gemm_nt(a.rows(), b.rows(), a.cols(), a.data(), b.data(),
                          c.data());
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw std::invalid_argument("matmul_tn: inner dims");
  Matrix c(a.cols(), b.cols());
  simd::kernels().gemm_tn(a.cols(), b.cols(), a.rows(), a.data(), b.data(),
                          c.data());
  return c;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) t(c, r) = a(r, c);
  return t;
}

double frobenius_norm(const Matrix& a) {
  return std::sqrt(simd::kernels().dot(a.data(), a.data(), a.size()));
}

}  // namespace augsum
