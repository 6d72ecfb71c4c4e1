// AVX2/FMA variants. This translation unit is compiled with -mavx2 -mfma and is
// only entered after a runtime CPU check, so it must not instantiate inline
// library templates that could be shared with the portable code.

#include "noisygap/kernels.hpp"

#if defined(NOISYGAP_HAVE_AVX2_KERNELS)

#include <immintrin.h>

namespace noisygap::kernels::avx2 {
namespace {

// Two complex numbers per register, interleaved (re, im).
inline __m256d cmul(__m256d x, __m256d re, __m256d im) {
  return _mm256_fmaddsub_pd(x, re, _mm256_mul_pd(_mm256_permute_pd(x, 0x5), im));
}

inline __m256d cmul_add(__m256d acc, __m256d x, __m256d re, __m256d im) {
  return _mm256_add_pd(acc, cmul(x, re, im));
}

void gemm(const cd* a, const cd* b, cd* c, std::size_t m, std::size_t k, std::size_t n) {
  const double* pa = reinterpret_cast<const double*>(a);
  const double* pb = reinterpret_cast<const double*>(b);
  double* pc = reinterpret_cast<double*>(c);
  const std::size_t n2 = n & ~std::size_t{1};
  for (std::size_t i = 0; i < m; ++i) {
    double* row = pc + 2 * i * n;
    for (std::size_t j = 0; j < 2 * n; ++j) row[j] = 0.0;
    for (std::size_t p = 0; p < k; ++p) {
      const double ar = pa[2 * (i * k + p)];
      const double ai = pa[2 * (i * k + p) + 1];
      const __m256d vr = _mm256_set1_pd(ar);
      const __m256d vi = _mm256_set1_pd(ai);
      const double* brow = pb + 2 * p * n;
      std::size_t j = 0;
      for (; j < n2; j += 2) {
        __m256d acc = _mm256_loadu_pd(row + 2 * j);
        acc = cmul_add(acc, _mm256_loadu_pd(brow + 2 * j), vr, vi);
        _mm256_storeu_pd(row + 2 * j, acc);
      }
      for (; j < n; ++j) {
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
  const double* bm = reinterpret_cast<const double*>(block.m);
  const __m256d m00r = _mm256_set1_pd(bm[0]), m00i = _mm256_set1_pd(bm[1]);
  const __m256d m01r = _mm256_set1_pd(bm[2]), m01i = _mm256_set1_pd(bm[3]);
  const __m256d m10r = _mm256_set1_pd(bm[4]), m10i = _mm256_set1_pd(bm[5]);
  const __m256d m11r = _mm256_set1_pd(bm[6]), m11i = _mm256_set1_pd(bm[7]);
  const std::size_t n2 = n & ~std::size_t{1};
  std::size_t j = 0;
  for (; j < n2; j += 2) {
    const __m256d x = _mm256_loadu_pd(pa + 2 * j);
    const __m256d y = _mm256_loadu_pd(pb + 2 * j);
    const __m256d na = _mm256_add_pd(cmul(x, m00r, m00i), cmul(y, m01r, m01i));
    const __m256d nb = _mm256_add_pd(cmul(x, m10r, m10i), cmul(y, m11r, m11i));
    _mm256_storeu_pd(pa + 2 * j, na);
    _mm256_storeu_pd(pb + 2 * j, nb);
  }
  for (; j < n; ++j) {
    const double xr = pa[2 * j], xi = pa[2 * j + 1];
    const double yr = pb[2 * j], yi = pb[2 * j + 1];
    pa[2 * j] = bm[0] * xr - bm[1] * xi + bm[2] * yr - bm[3] * yi;
    pa[2 * j + 1] = bm[0] * xi + bm[1] * xr + bm[2] * yi + bm[3] * yr;
    pb[2 * j] = bm[4] * xr - bm[5] * xi + bm[6] * yr - bm[7] * yi;
    pb[2 * j + 1] = bm[4] * xi + bm[5] * xr + bm[6] * yi + bm[7] * yr;
  }
}

void accumulate_abs2(const cd* x, double* acc, std::size_t n) {
  const double* px = reinterpret_cast<const double*>(x);
  const std::size_t n4 = n & ~std::size_t{3};
  std::size_t j = 0;
  for (; j < n4; j += 4) {
    const __m256d lo = _mm256_loadu_pd(px + 2 * j);
    const __m256d hi = _mm256_loadu_pd(px + 2 * j + 4);
    // hadd -> (|x0|^2, |x2|^2, |x1|^2, |x3|^2); reorder to natural order.
    const __m256d h = _mm256_hadd_pd(_mm256_mul_pd(lo, lo), _mm256_mul_pd(hi, hi));
    const __m256d s = _mm256_permute4x64_pd(h, 0xD8);
    _mm256_storeu_pd(acc + j, _mm256_add_pd(_mm256_loadu_pd(acc + j), s));
  }
  for (; j < n; ++j) acc[j] += px[2 * j] * px[2 * j] + px[2 * j + 1] * px[2 * j + 1];
}

void scale(cd* x, std::size_t n, double s) {
  double* px = reinterpret_cast<double*>(x);
  const __m256d vs = _mm256_set1_pd(s);
  const std::size_t total = 2 * n;
  const std::size_t t4 = total & ~std::size_t{3};
  std::size_t j = 0;
  for (; j < t4; j += 4) _mm256_storeu_pd(px + j, _mm256_mul_pd(_mm256_loadu_pd(px + j), vs));
  for (; j < total; ++j) px[j] *= s;
}

void dot(const cd* x, const cd* y, std::size_t n, double* re, double* im) {
  const double* px = reinterpret_cast<const double*>(x);
  const double* py = reinterpret_cast<const double*>(y);
  __m256d s1 = _mm256_setzero_pd();
  __m256d s2 = _mm256_setzero_pd();
  const std::size_t n2 = n & ~std::size_t{1};
  std::size_t j = 0;
  for (; j < n2; j += 2) {
    const __m256d vx = _mm256_loadu_pd(px + 2 * j);
    const __m256d vy = _mm256_loadu_pd(py + 2 * j);
    s1 = _mm256_fmadd_pd(vx, vy, s1);                             // (xr yr, xi yi)
    s2 = _mm256_fmadd_pd(vx, _mm256_permute_pd(vy, 0x5), s2);     // (xr yi, xi yr)
  }
  alignas(32) double t1[4];
  alignas(32) double t2[4];
  _mm256_store_pd(t1, s1);
  _mm256_store_pd(t2, s2);
  double sr = (t1[0] + t1[1]) + (t1[2] + t1[3]);
  double si = (t2[0] - t2[1]) + (t2[2] - t2[3]);
  for (; j < n; ++j) {
    sr += px[2 * j] * py[2 * j] + px[2 * j + 1] * py[2 * j + 1];
    si += px[2 * j] * py[2 * j + 1] - px[2 * j + 1] * py[2 * j];
  }
  *re = sr;
  *im = si;
}

}  // namespace

const KernelTable kTable{"avx2", gemm, pair_combine, accumulate_abs2, scale, dot};

}  // namespace noisygap::kernels::avx2

#endif
