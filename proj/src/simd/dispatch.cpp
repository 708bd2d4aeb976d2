#include <atomic>
#include <cstdlib>
#include <string>

#include "kernels_internal.hpp"
#include "spot/common/error.hpp"

namespace spot::simd {
namespace {

const Kernels* initial_choice() {
  const char* env = std::getenv("SPOT_SIMD");
  const std::string want = env ? env : "auto";
  if (want == "scalar") return &detail::kScalarKernels;
  if ((want == "auto" || want == "avx2") && cpu_supports(Isa::kAvx2)) return avx2_kernels();
  return &detail::kScalarKernels;
}

std::atomic<const Kernels*>& active_slot() {
  static std::atomic<const Kernels*> slot{initial_choice()};
  return slot;
}

}  // namespace

const Kernels& scalar_kernels() { return detail::kScalarKernels; }

const Kernels* avx2_kernels() {
#ifdef SPOT_HAVE_AVX2
  return &detail::kAvx2Kernels;
#else
  return nullptr;
#endif
}

bool cpu_supports(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return true;
    case Isa::kAvx2:
#if defined(SPOT_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

const Kernels& active() { return *active_slot().load(std::memory_order_relaxed); }

void select(Isa isa) {
  if (!cpu_supports(isa)) throw ContractError("requested SIMD variant is not available on this CPU/build");
  active_slot().store(isa == Isa::kAvx2 ? avx2_kernels() : &detail::kScalarKernels);
}

}  // namespace spot::simd
