#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "ecbm/model.hpp"
#include "ecbm/simd/kernels.hpp"

using namespace ecbm;

namespace {

std::vector<double> random_buffer(std::size_t n, std::mt19937_64& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = 2.0 * uniform01(rng) - 1.0;
  return v;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Lengths straddling the 4-wide vector body and its tail.
const std::size_t kSizes[] = {0, 1, 3, 4, 5, 7, 8, 15, 16, 17, 33, 100};

}  // namespace

TEST_CASE("scalar kernels match naive loops") {
  std::mt19937_64 rng(1);
  const auto& k = simd::scalar_kernels();
  for (auto m : {1, 3, 6}) {
    for (auto n : kSizes) {
      auto a = random_buffer(m * n, rng);
      auto x = random_buffer(n, rng);
      auto xm = random_buffer(m, rng);
      std::vector<double> y(m, 0.0), ref(m, 0.0);
      k.gemv(a.data(), x.data(), y.data(), m, n);
      for (int i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) ref[i] += a[i * n + j] * x[j];
      CHECK(max_abs_diff(y, ref) < 1e-12);

      std::vector<double> yt(n, 0.5), reft(n, 0.5);
      k.gemv_t(a.data(), xm.data(), yt.data(), m, n);
      for (int i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) reft[j] += a[i * n + j] * xm[i];
      CHECK(max_abs_diff(yt, reft) < 1e-12);

      auto g = a;
      auto gref = a;
      k.ger(0.75, xm.data(), x.data(), g.data(), m, n);
      for (int i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) gref[i * n + j] += 0.75 * xm[i] * x[j];
      CHECK(max_abs_diff(g, gref) < 1e-12);
    }
  }
  for (auto n : kSizes) {
    auto a = random_buffer(n, rng);
    auto b = random_buffer(n, rng);
    double ref = 0.0;
    for (std::size_t i = 0; i < n; ++i) ref += a[i] * b[i];
    CHECK(std::abs(k.dot(a.data(), b.data(), n) - ref) < 1e-12);
    auto y = b;
    k.axpy(-1.5, a.data(), y.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(y[i] == doctest::Approx(b[i] - 1.5 * a[i]).epsilon(1e-15));
  }
}

#if defined(__x86_64__) || defined(_M_X64)
TEST_CASE("avx2 kernels agree with the scalar reference") {
  if (!simd::isa_available(simd::Isa::Avx2)) {
    MESSAGE("AVX2 not available on this CPU; equivalence check skipped");
    return;
  }
  std::mt19937_64 rng(2);
  const auto& s = simd::scalar_kernels();
  const auto& v = simd::avx2_kernels();
  for (auto m : {1, 2, 5, 9}) {
    for (auto n : kSizes) {
      auto a = random_buffer(m * n, rng);
      auto x = random_buffer(n, rng);
      auto xm = random_buffer(m, rng);
      const double tol = 1e-13 * static_cast<double>(n + 1);

      CHECK(std::abs(s.dot(a.data(), x.data(), n) - v.dot(a.data(), x.data(), n)) < tol);

      std::vector<double> ys(m), yv(m);
      s.gemv(a.data(), x.data(), ys.data(), m, n);
      v.gemv(a.data(), x.data(), yv.data(), m, n);
      CHECK(max_abs_diff(ys, yv) < tol);

      std::vector<double> ts(n, 1.0), tv(n, 1.0);
      s.gemv_t(a.data(), xm.data(), ts.data(), m, n);
      v.gemv_t(a.data(), xm.data(), tv.data(), m, n);
      CHECK(max_abs_diff(ts, tv) < tol);

      auto gs = a;
      auto gv = a;
      s.ger(-0.3, xm.data(), x.data(), gs.data(), m, n);
      v.ger(-0.3, xm.data(), x.data(), gv.data(), m, n);
      CHECK(max_abs_diff(gs, gv) < 1e-14);

      auto as = x;
      auto av = x;
      s.axpy(2.5, x.data(), as.data(), n);
      v.axpy(2.5, x.data(), av.data(), n);
      CHECK(max_abs_diff(as, av) < 1e-14);
    }
  }
}
#endif

TEST_CASE("dispatch can be forced and restored") {
  const auto detected = simd::active_isa();
  simd::set_isa(simd::Isa::Scalar);
  CHECK(simd::active_isa() == simd::Isa::Scalar);
  CHECK(&simd::kernels() == &simd::scalar_kernels());
  simd::reset_isa();
  CHECK(simd::active_isa() == detected);
  CHECK(simd::isa_name(simd::Isa::Scalar) == "scalar");
  if (!simd::isa_available(simd::Isa::Avx2)) CHECK_THROWS_AS(simd::set_isa(simd::Isa::Avx2), std::invalid_argument);
}
