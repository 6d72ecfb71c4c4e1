#pragma once

// Inner-loop kernels for complex dense arithmetic.
//
// Every kernel has a portable scalar reference implementation and, on x86-64,
// an AVX2/FMA variant. The variant is picked once at runtime from the CPU
// feature bits; NOISYGAP_SIMD=scalar|avx2 overrides the choice. Both variants
// operate on interleaved (re, im) doubles so std::complex<double> buffers can
// be handed over directly.

#include <complex>
#include <cstddef>
#include <string_view>

namespace noisygap::kernels {

using cd = std::complex<double>;

/// 2x2 complex block in row-major order: {m00, m01, m10, m11}.
struct Block2 {
  cd m[4];
};

struct KernelTable {
  const char* name;
  /// c[m x n] = a[m x k] * b[k x n]; all row-major and contiguous, c must not alias.
  void (*gemm)(const cd* a, const cd* b, cd* c, std::size_t m, std::size_t k, std::size_t n);
  /// (a, b) <- (m00 a + m01 b, m10 a + m11 b), element-wise over n entries.
  void (*pair_combine)(cd* a, cd* b, std::size_t n, const Block2& block);
  /// acc[j] += |x[j]|^2.
  void (*accumulate_abs2)(const cd* x, double* acc, std::size_t n);
  /// x[j] *= s.
  void (*scale)(cd* x, std::size_t n, double s);
  /// Returns sum_j conj(x[j]) * y[j] through (re, im).
  void (*dot)(const cd* x, const cd* y, std::size_t n, double* re, double* im);
};

enum class Isa { kScalar, kAvx2 };

std::string_view isa_name(Isa isa);

/// True when the variant was compiled in and the running CPU supports it.
bool available(Isa isa);

/// Kernel table for an explicit variant; throws DomainError if unavailable.
const KernelTable& table(Isa isa);

/// Kernel table used by the library.
const KernelTable& active();
Isa active_isa();

/// Overrides the dispatch decision (tests and benchmarking).
void force(Isa isa);

namespace scalar {
extern const KernelTable kTable;
}

#if defined(__x86_64__) || defined(_M_X64)
#define NOISYGAP_HAVE_AVX2_KERNELS 1
namespace avx2 {
extern const KernelTable kTable;
}
#endif

}  // namespace noisygap::kernels
