#include <atomic>
#include <cstdlib>
#include <string>

#include "seadet/error.hpp"
#include "seadet/simd/kernels.hpp"
#include "simd/kernels_internal.hpp"

namespace seadet::simd {
namespace {

bool cpu_has_avx2() {
#if defined(SEADET_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* initial_table() {
  const KernelTable* best = avx2_kernels();
  if (const char* env = std::getenv("SEADET_ISA")) {
    const std::string want(env);
    if (want == "scalar") return &scalar_kernels();
    if (want == "avx2" && best) return best;
  }
  return best ? best : &scalar_kernels();
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{initial_table()};
  return table;
}

}  // namespace

const KernelTable* avx2_kernels() {
#if defined(SEADET_HAVE_AVX2)
  static const bool ok = cpu_has_avx2();
  return ok ? &detail::avx2_table() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active_kernels() { return *current().load(std::memory_order_acquire); }

void select_isa(Isa isa) {
  const KernelTable* table = isa == Isa::Scalar ? &scalar_kernels() : avx2_kernels();
  if (!table) {
    throw Error(ErrorCode::InvalidParameter,
                "instruction set " + std::string(to_string(isa)) + " not available");
  }
  current().store(table, std::memory_order_release);
}

Isa active_isa() { return active_kernels().isa; }

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
  }
  return "unknown";
}

}  // namespace seadet::simd
