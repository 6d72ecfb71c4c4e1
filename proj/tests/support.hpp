#pragma once

#include <random>

#include "noisygap/linalg.hpp"

namespace noisygap::fixtures {

inline ComplexMatrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  ComplexMatrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = cd(n(gen), n(gen));
  return m;
}

inline ComplexVector random_vector(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> d(0.0, 1.0);
  ComplexVector v(n);
  for (auto& x : v) x = cd(d(gen), d(gen));
  return v;
}

inline double max_abs_diff(std::span<const cd> a, std::span<const cd> b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

}  // namespace noisygap::fixtures
