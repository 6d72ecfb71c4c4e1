#include <string>

#include "noisygap/error.hpp"
#include "noisygap/kernels.hpp"
#include "noisygap/linalg.hpp"

namespace noisygap {

// With v reshaped row-major to an X x X matrix V, (a kron b) v = vec(a V b^T).
ComplexVector apply_kron2(const ComplexMatrix& a, const ComplexMatrix& b, std::span<const cd> v) {
  if (!a.is_square() || !b.is_square() || a.rows() != b.rows()) {
    throw DimensionError("apply_kron2: factors must be square and of equal size");
  }
  const std::size_t x = a.rows();
  if (v.size() != x * x) {
    throw DimensionError("apply_kron2: vector length " + std::to_string(v.size()) + ", expected " +
                         std::to_string(x * x));
  }
  const auto& k = kernels::active();
  ComplexVector tmp(x * x);
  k.gemm(a.data(), v.data(), tmp.data(), x, x, x);
  const ComplexMatrix bt = b.transpose();
  ComplexVector out(x * x);
  k.gemm(tmp.data(), bt.data(), out.data(), x, x, x);
  return out;
}

ComplexVector apply_swap2(std::span<const cd> v) {
  const std::size_t x = exact_sqrt(v.size());
  ComplexVector out(v.size());
  for (std::size_t i = 0; i < x; ++i)
    for (std::size_t j = 0; j < x; ++j) out[j * x + i] = v[i * x + j];
  return out;
}

}  // namespace noisygap
