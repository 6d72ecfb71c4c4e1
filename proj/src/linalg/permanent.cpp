#include <bit>
#include <cstdint>
#include <string>
#include <vector>

#include "noisygap/error.hpp"
#include "noisygap/linalg.hpp"

namespace noisygap {

// Per(A) = (-1)^n sum_{S subset of columns} (-1)^{|S|} prod_i sum_{j in S} a_ij.
// Subsets are visited in Gray-code order so each step toggles one column and
// the row sums are updated in O(n).
cd permanent(const ComplexMatrix& m) {
  if (!m.is_square()) throw DimensionError("permanent: matrix must be square");
  const std::size_t n = m.rows();
  if (n > kMaxPermanentOrder) {
    throw DomainError("permanent: order " + std::to_string(n) + " exceeds the limit " +
                      std::to_string(kMaxPermanentOrder));
  }
  if (n == 0) return 1.0;
  if (n == 1) return m(0, 0);

  std::vector<double> sums(2 * n, 0.0);
  double total_re = 0.0, total_im = 0.0;
  std::uint64_t gray = 0;
  const std::uint64_t count = std::uint64_t{1} << n;
  for (std::uint64_t k = 1; k < count; ++k) {
    const int j = std::countr_zero(k);
    gray ^= std::uint64_t{1} << j;
    const double sign = (gray >> j) & 1U ? 1.0 : -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      sums[2 * i] += sign * m(i, static_cast<std::size_t>(j)).real();
      sums[2 * i + 1] += sign * m(i, static_cast<std::size_t>(j)).imag();
    }
    double pr = sums[0], pi = sums[1];
    for (std::size_t i = 1; i < n; ++i) {
      const double r = pr * sums[2 * i] - pi * sums[2 * i + 1];
      pi = pr * sums[2 * i + 1] + pi * sums[2 * i];
      pr = r;
    }
    if (std::popcount(gray) & 1) {
      total_re -= pr;
      total_im -= pi;
    } else {
      total_re += pr;
      total_im += pi;
    }
  }
  const double outer = (n & 1U) ? -1.0 : 1.0;
  return {outer * total_re, outer * total_im};
}

}  // namespace noisygap
