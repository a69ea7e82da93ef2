#pragma once

#include <cstddef>
#include <string_view>

namespace ecbm::simd {

enum class Isa { Scalar, Avx2 };

// Row-major dense kernels. All pointers may alias only where noted.
struct KernelTable {
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y = A x, A is m x n
  void (*gemv)(const double* a, const double* x, double* y, std::size_t m, std::size_t n);
  // y += A^T x, A is m x n
  void (*gemv_t)(const double* a, const double* x, double* y, std::size_t m, std::size_t n);
  // A += alpha * x y^T, A is m x n
  void (*ger)(double alpha, const double* x, const double* y, double* a, std::size_t m, std::size_t n);
};

const KernelTable& scalar_kernels();
#if defined(__x86_64__) || defined(_M_X64)
const KernelTable& avx2_kernels();
#endif

bool isa_available(Isa isa);
Isa active_isa();
// Forces a kernel set. Throws std::invalid_argument if the CPU lacks it.
void set_isa(Isa isa);
// Restores the automatically detected kernel set.
void reset_isa();
std::string_view isa_name(Isa isa);

const KernelTable& kernels();

inline double dot(const double* a, const double* b, std::size_t n) { return kernels().dot(a, b, n); }
inline void axpy(double alpha, const double* x, double* y, std::size_t n) { kernels().axpy(alpha, x, y, n); }
inline void gemv(const double* a, const double* x, double* y, std::size_t m, std::size_t n) {
  kernels().gemv(a, x, y, m, n);
}
inline void gemv_t(const double* a, const double* x, double* y, std::size_t m, std::size_t n) {
  kernels().gemv_t(a, x, y, m, n);
}
inline void ger(double alpha, const double* x, const double* y, double* a, std::size_t m, std::size_t n) {
  kernels().ger(alpha, x, y, a, m, n);
}

}  // namespace ecbm::simd
