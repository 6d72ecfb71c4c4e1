#include "noisygap/kernels.hpp"

namespace noisygap::kernels::scalar {
namespace {

// Arithmetic is spelled out on (re, im) pairs so the compiler does not route
// through the NaN-recovering complex multiply.

void gemm(const cd* a, const cd* b, cd* c, std::size_t m, std::size_t k, std::size_t n) {
  const double* pa = reinterpret_cast<const double*>(a);
  const double* pb = reinterpret_cast<const double*>(b);
  double* pc = reinterpret_cast<double*>(c);
  for (std::size_t i = 0; i < m; ++i) {
    double* row = pc + 2 * i * n;
    for (std::size_t j = 0; j < 2 * n; ++j) row[j] = 0.0;
    for (std::size_t p = 0; p < k; ++p) {
      const double ar = pa[2 * (i * k + p)];
      const double ai = pa[2 * (i * k + p) + 1];
      const double* brow = pb + 2 * p * n;
      for (std::size_t j = 0; j < n; ++j) {
        const double br = brow[2 * j];
        const double bi = brow[2 * j + 1];
        row[2 * j] += ar * br - ai * bi;
        row[2 * j + 1] += ar * bi + ai * br;
      }
    }
  }
}

void pair_combine(cd* a, cd* b, std::size_t n, const Block2& block) {
  double* pa = reinterpret_cast<double*>(a);
  double* pb = reinterpret_cast<double*>(b);
  const double m00r = block.m[0].real(), m00i = block.m[0].imag();
  const double m01r = block.m[1].real(), m01i = block.m[1].imag();
  const double m10r = block.m[2].real(), m10i = block.m[2].imag();
  const double m11r = block.m[3].real(), m11i = block.m[3].imag();
  for (std::size_t j = 0; j < n; ++j) {
    const double xr = pa[2 * j], xi = pa[2 * j + 1];
    const double yr = pb[2 * j], yi = pb[2 * j + 1];
    pa[2 * j] = m00r * xr - m00i * xi + m01r * yr - m01i * yi;
    pa[2 * j + 1] = m00r * xi + m00i * xr + m01r * yi + m01i * yr;
    pb[2 * j] = m10r * xr - m10i * xi + m11r * yr - m11i * yi;
    pb[2 * j + 1] = m10r * xi + m10i * xr + m11r * yi + m11i * yr;
  }
}

void accumulate_abs2(const cd* x, double* acc, std::size_t n) {
  const double* px = reinterpret_cast<const double*>(x);
  for (std::size_t j = 0; j < n; ++j) acc[j] += px[2 * j] * px[2 * j] + px[2 * j + 1] * px[2 * j + 1];
}

void scale(cd* x, std::size_t n, double s) {
  double* px = reinterpret_cast<double*>(x);
  for (std::size_t j = 0; j < 2 * n; ++j) px[j] *= s;
}

void dot(const cd* x, const cd* y, std::size_t n, double* re, double* im) {
  const double* px = reinterpret_cast<const double*>(x);
  const double* py = reinterpret_cast<const double*>(y);
  double sr = 0.0, si = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    sr += px[2 * j] * py[2 * j] + px[2 * j + 1] * py[2 * j + 1];
    si += px[2 * j] * py[2 * j + 1] - px[2 * j + 1] * py[2 * j];
  }
  *re = sr;
  *im = si;
}

}  // namespace

const KernelTable kTable{"scalar", gemm, pair_combine, accumulate_abs2, scale, dot};

}  // namespace noisygap::kernels::scalar
