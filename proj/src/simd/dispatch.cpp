#include <atomic>
#include <cstdlib>
#include <string>

#include "fairdyn/common/error.hpp"
#include "fairdyn/simd/kernels.hpp"
#include "kernels_impl.hpp"

namespace fairdyn::simd {
namespace {

const KernelTable kScalarTable{Isa::kScalar,      "scalar",        scalar::dot, scalar::axpy,
                               scalar::dense,     scalar::softsign, scalar::softsign_backward};

#if defined(FAIRDYN_HAVE_AVX2)
const KernelTable kAvx2Table{Isa::kAvx2,     "avx2",         avx2::dot, avx2::axpy,
                             avx2::dense,    avx2::softsign, avx2::softsign_backward};

bool cpu_has_avx2() {
#if defined(__GNUC__) && (defined(__x86_64__) || defined(__i386__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}
#endif

const KernelTable* initial_table() {
  const KernelTable* best = avx2_kernels();
  if (const char* env = std::getenv("FAIRDYN_SIMD")) {
    const std::string want(env);
    if (want == "scalar") return &kScalarTable;
  }
  return best != nullptr ? best : &kScalarTable;
}

std::atomic<const KernelTable*>& active_slot() {
  static std::atomic<const KernelTable*> slot{initial_table()};
  return slot;
}

}  // namespace

const KernelTable& scalar_kernels() { return kScalarTable; }

const KernelTable* avx2_kernels() {
#if defined(FAIRDYN_HAVE_AVX2)
  static const bool supported = cpu_has_avx2();
  return supported ? &kAvx2Table : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& kernels() { return *active_slot().load(std::memory_order_relaxed); }

Isa active_isa() { return kernels().isa; }

std::string_view isa_name(Isa isa) { return isa == Isa::kAvx2 ? "avx2" : "scalar"; }

void select_isa(Isa isa) {
  if (isa == Isa::kScalar) {
    active_slot().store(&kScalarTable);
    return;
  }
  const KernelTable* t = avx2_kernels();
  require(t != nullptr, ErrorCode::kInvalidArgument, "AVX2 kernels unavailable on this build/CPU");
  active_slot().store(t);
}

}  // namespace fairdyn::simd
