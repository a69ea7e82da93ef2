#include <immintrin.h>

#include "ecbm/simd/kernels.hpp"

namespace ecbm::simd {
namespace {

inline double hsum(__m256d v) {
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

void gemv_avx2(const double* a, const double* x, double* y, std::size_t m, std::size_t n) {
  for (std::size_t r = 0; r < m; ++r) y[r] = dot_avx2(a + r * n, x, n);
}

void gemv_t_avx2(const double* a, const double* x, double* y, std::size_t m, std::size_t n) {
  for (std::size_t r = 0; r < m; ++r) axpy_avx2(x[r], a + r * n, y, n);
}

void ger_avx2(double alpha, const double* x, const double* y, double* a, std::size_t m, std::size_t n) {
  for (std::size_t r = 0; r < m; ++r) axpy_avx2(alpha * x[r], y, a + r * n, n);
}

}  // namespace

const KernelTable& avx2_kernels() {
  static const KernelTable table{dot_avx2, axpy_avx2, gemv_avx2, gemv_t_avx2, ger_avx2};
  return table;
}

}  // namespace ecbm::simd
