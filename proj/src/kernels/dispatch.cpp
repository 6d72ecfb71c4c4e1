#include <atomic>
#include <cstdlib>
#include <string>

#include "noisygap/error.hpp"
#include "noisygap/kernels.hpp"

namespace noisygap::kernels {
namespace {

bool probe_avx2() {
#if defined(NOISYGAP_HAVE_AVX2_KERNELS) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

bool cpu_has_avx2() {
  static const bool has = probe_avx2();
  return has;
}

Isa detect() {
  if (const char* env = std::getenv("NOISYGAP_SIMD")) {
    const std::string choice(env);
    if (choice == "scalar") return Isa::kScalar;
    if (choice == "avx2" && cpu_has_avx2()) return Isa::kAvx2;
  }
  return cpu_has_avx2() ? Isa::kAvx2 : Isa::kScalar;
}

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{detect()};
  return isa;
}

}  // namespace

std::string_view isa_name(Isa isa) { return isa == Isa::kAvx2 ? "avx2" : "scalar"; }

bool available(Isa isa) { return isa == Isa::kScalar || cpu_has_avx2(); }

const KernelTable& table(Isa isa) {
  if (isa == Isa::kScalar) return scalar::kTable;
#if defined(NOISYGAP_HAVE_AVX2_KERNELS)
  if (cpu_has_avx2()) return avx2::kTable;
#endif
  throw DomainError("kernel variant '" + std::string(isa_name(isa)) + "' is not available on this CPU");
}

const KernelTable& active() { return table(current().load(std::memory_order_relaxed)); }

Isa active_isa() { return current().load(std::memory_order_relaxed); }

void force(Isa isa) {
  if (!available(isa)) {
    throw DomainError("kernel variant '" + std::string(isa_name(isa)) + "' is not available on this CPU");
  }
  current().store(isa, std::memory_order_relaxed);
}

}  // namespace noisygap::kernels
