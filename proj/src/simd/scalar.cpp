#include "ecbm/simd/kernels.hpp"

namespace ecbm::simd {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void gemv_scalar(const double* a, const double* x, double* y, std::size_t m, std::size_t n) {
  for (std::size_t r = 0; r < m; ++r) y[r] = dot_scalar(a + r * n, x, n);
}

void gemv_t_scalar(const double* a, const double* x, double* y, std::size_t m, std::size_t n) {
  for (std::size_t r = 0; r < m; ++r) axpy_scalar(x[r], a + r * n, y, n);
}

void ger_scalar(double alpha, const double* x, const double* y, double* a, std::size_t m, std::size_t n) {
  for (std::size_t r = 0; r < m; ++r) axpy_scalar(alpha * x[r], y, a + r * n, n);
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{dot_scalar, axpy_scalar, gemv_scalar, gemv_t_scalar, ger_scalar};
  return table;
}

}  // namespace ecbm::simd
