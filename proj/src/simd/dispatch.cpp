#include <atomic>
#include <cstdlib>
#include <cstring>
#include <stdexcept>

#include "ecbm/simd/kernels.hpp"

namespace ecbm::simd {
namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa detect() {
  const char* env = std::getenv("ECBM_SIMD");
  if (env != nullptr && std::strcmp(env, "scalar") == 0) return Isa::Scalar;
  return cpu_has_avx2() ? Isa::Avx2 : Isa::Scalar;
}

const KernelTable& table_for(Isa isa) {
#if defined(__x86_64__) || defined(_M_X64)
  if (isa == Isa::Avx2) return avx2_kernels();
#endif
  return scalar_kernels();
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{&table_for(detect())};
  return table;
}

std::atomic<Isa>& current_isa() {
  static std::atomic<Isa> isa{detect()};
  return isa;
}

}  // namespace

bool isa_available(Isa isa) { return isa == Isa::Scalar || cpu_has_avx2(); }

Isa active_isa() { return current_isa().load(); }

void set_isa(Isa isa) {
  if (!isa_available(isa)) throw std::invalid_argument("requested SIMD kernel set is not supported on this CPU");
  current_isa().store(isa);
  current().store(&table_for(isa));
}

void reset_isa() { set_isa(detect()); }

std::string_view isa_name(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

const KernelTable& kernels() { return *current().load(std::memory_order_relaxed); }

}  // namespace ecbm::simd
