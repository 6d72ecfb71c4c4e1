#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "noisygap/error.hpp"
#include "noisygap/linalg.hpp"
#include "support.hpp"

using namespace noisygap;

namespace {

cd brute_force_permanent(const ComplexMatrix& m) {
  const std::size_t n = m.rows();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  cd total = 0;
  do {
    cd term = 1;
    for (std::size_t i = 0; i < n; ++i) term *= m(i, perm[i]);
    total += term;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return total;
}

ComplexMatrix permutation_matrix(const std::vector<std::size_t>& p) {
  ComplexMatrix m(p.size(), p.size());
  for (std::size_t i = 0; i < p.size(); ++i) m(i, p[i]) = 1.0;
  return m;
}

}  // namespace

TEST(ComplexMatrix, RejectsBadShapesAndNonFinite) {
  EXPECT_THROW(ComplexMatrix(2, 2, std::vector<cd>(3)), DimensionError);
  EXPECT_THROW(ComplexMatrix(1, 1, std::vector<cd>{cd(NAN, 0)}), NumericalError);
  EXPECT_THROW(ComplexMatrix(2, 3) * ComplexMatrix(2, 3), DimensionError);
}

TEST(ComplexMatrix, AdjointAndTrace) {
  const ComplexMatrix m{{cd(1, 2), cd(3, 0)}, {cd(0, -1), cd(4, 4)}};
  const auto a = m.adjoint();
  EXPECT_EQ(a(0, 1), cd(0, 1));
  EXPECT_EQ(a(1, 0), cd(3, 0));
  EXPECT_EQ(m.trace(), cd(5, 6));
}

TEST(ScaledMultiply, IdentityStep) {
  const auto p = scaled_multiply(ScaledProduct::identity(3), ComplexMatrix::identity(3));
  EXPECT_EQ(p.core(), ComplexMatrix::identity(3));
  EXPECT_EQ(p.log_scale(), 0.0);
}

TEST(ScaledMultiply, UniformScaling) {
  const std::vector<cd> two{2.0, 2.0};
  const auto p = scaled_multiply(ScaledProduct::identity(2), ComplexMatrix::diagonal(two));
  EXPECT_LT(max_abs_diff(p.core(), ComplexMatrix::identity(2)), 1e-15);
  EXPECT_NEAR(p.log_scale(), std::log(2.0), 1e-15);
}

TEST(ScaledMultiply, LongDiagonalProductWithoutOverflow) {
  const std::vector<cd> d{2.0, 0.5};
  const auto q = ComplexMatrix::diagonal(d);
  auto p = ScaledProduct::identity(2);
  for (int i = 0; i < 10000; ++i) p = scaled_multiply(p, q);
  EXPECT_TRUE(p.core().all_finite());
  EXPECT_NEAR(std::abs(p.core()(0, 0)), 1.0, 1e-12);
  EXPECT_NEAR(p.log_scale(), 10000 * std::log(2.0), 1e-8);
  // The second entry underflows to zero: 0.25^10000 is far below the double range,
  // while the logarithm of the ratio stays exact.
  EXPECT_EQ(std::abs(p.core()(1, 1)), 0.0);
  const double log_ratio = 10000 * std::log(0.25);
  EXPECT_NEAR(log_ratio / 10000, std::log(0.25), 1e-15);
}

TEST(ScaledMultiply, CoreNormalizedAndRepresentsProduct) {
  auto p = ScaledProduct::identity(5);
  ComplexMatrix direct = ComplexMatrix::identity(5);
  for (int i = 0; i < 8; ++i) {
    const auto q = fixtures::random_matrix(5, 5, 100 + i);
    p = scaled_multiply(p, q);
    direct = q * direct;
    EXPECT_NEAR(max_column_norm(p.core()), 1.0, 1e-12);
  }
  EXPECT_LT(max_abs_diff(p.materialize(), direct), 1e-9 * direct.frobenius_norm());
}

TEST(ScaledMultiply, Errors) {
  EXPECT_THROW(scaled_multiply(ScaledProduct::identity(2), ComplexMatrix::identity(3)), DimensionError);
  EXPECT_THROW(scaled_multiply(ScaledProduct::identity(2), ComplexMatrix(2, 2)), NumericalError);
}

TEST(EigSorted, IdentityAndModulusOrder) {
  const auto id = eig_sorted(ComplexMatrix::identity(3), false);
  for (auto l : id.eigenvalues) EXPECT_NEAR(std::abs(l - 1.0), 0.0, 1e-15);
  const std::vector<cd> d{1.0, cd(0, 2)};
  const auto s = eig_sorted(ComplexMatrix::diagonal(d), true);
  EXPECT_NEAR(std::abs(s.eigenvalues[0] - cd(0, 2)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(s.eigenvalues[1] - 1.0), 0.0, 1e-15);
}

TEST(EigSorted, TieBreakByRealThenImag) {
  const std::vector<cd> d{cd(0, -1), cd(-1, 0), cd(0, 1), cd(1, 0)};
  const auto s = eig_sorted(ComplexMatrix::diagonal(d), false);
  const std::vector<cd> want{cd(1, 0), cd(0, 1), cd(0, -1), cd(-1, 0)};
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(std::abs(s.eigenvalues[i] - want[i]), 0.0, 1e-15);
}

TEST(EigSorted, ReconstructionOracle) {
  const auto m = fixtures::random_matrix(6, 6, 2024);
  const auto s = eig_sorted(m, true);
  ASSERT_TRUE(s.left_modes.has_value());
  EXPECT_LT(s.biorthogonality_residual, 1e-8);
  ComplexMatrix rebuilt(6, 6);
  for (std::size_t k = 0; k < 6; ++k) {
    EXPECT_NEAR(norm2(s.right_modes.column(k)), 1.0, 1e-12);
    if (k + 1 < 6) EXPECT_GE(std::abs(s.eigenvalues[k]), std::abs(s.eigenvalues[k + 1]));
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t j = 0; j < 6; ++j)
        rebuilt(i, j) += s.eigenvalues[k] * s.right_modes(i, k) * (*s.left_modes)(k, j);
  }
  EXPECT_LT(max_abs_diff(rebuilt, m), 1e-8 * m.frobenius_norm());
}

TEST(EigSorted, NearDefectiveThrowsOrFlags) {
  const ComplexMatrix jordan{{1.0, 1.0}, {0.0, 1.0}};
  try {
    eig_sorted(jordan, true);
    FAIL() << "expected NearDefectiveError";
  } catch (const NearDefectiveError& e) {
    EXPECT_GT(e.residual(), kNearDefectiveThreshold);
  }
  const auto s = eig_sorted(jordan, true, DefectivePolicy::kFlag);
  EXPECT_TRUE(s.near_defective);
}

TEST(EigSorted, ScaleInvariantRatios) {
  const auto m = fixtures::random_matrix(5, 5, 9);
  const auto a = eig_sorted(m, false);
  const auto b = eig_sorted(cd(3.7e5, 0) * m, false);
  for (std::size_t i = 1; i < 5; ++i)
    EXPECT_NEAR(std::abs(a.eigenvalues[i] / a.eigenvalues[0]),
                std::abs(b.eigenvalues[i] / b.eigenvalues[0]), 1e-12);
}

TEST(SvdSorted, SimpleCases) {
  const std::vector<cd> d{3.0, 4.0};
  const auto s = svd_sorted(ComplexMatrix::diagonal(d));
  EXPECT_NEAR(s.singular_values[0], 4.0, 1e-14);
  EXPECT_NEAR(s.singular_values[1], 3.0, 1e-14);
  const double r = 1.0 / std::sqrt(2.0);
  const ComplexMatrix u{{r, -r}, {r, r}};
  for (double v : svd_sorted(u).singular_values) EXPECT_NEAR(v, 1.0, 1e-14);
  EXPECT_THROW(svd_sorted(ComplexMatrix(1, 1, std::vector<cd>{cd(INFINITY, 0)})), NumericalError);
}

TEST(SvdSorted, FrobeniusAndCrossDecomposition) {
  const auto m = fixtures::random_matrix(7, 7, 31);
  const auto s = svd_sorted(m);
  double sum = 0;
  for (double v : s.singular_values) sum += v * v;
  EXPECT_NEAR(sum, std::pow(m.frobenius_norm(), 2), 1e-10 * sum);
  const auto e = eig_sorted(m.adjoint() * m, false);
  for (std::size_t i = 0; i < 7; ++i)
    EXPECT_NEAR(s.singular_values[i] * s.singular_values[i], e.eigenvalues[i].real(), 1e-9 * sum);
}

TEST(Permanent, SmallClosedForms) {
  EXPECT_NEAR(std::abs(permanent(ComplexMatrix::identity(4)) - 1.0), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(permanent(ComplexMatrix{{1.0, 2.0}, {3.0, 4.0}}) - 10.0), 0.0, 1e-14);
  EXPECT_EQ(permanent(ComplexMatrix(0, 0)), cd(1.0));
  EXPECT_THROW(permanent(ComplexMatrix(21, 21)), DomainError);
  EXPECT_THROW(permanent(ComplexMatrix(2, 3)), DimensionError);
}

TEST(Permanent, RyserMatchesBruteForce) {
  for (std::size_t n = 1; n <= 6; ++n) {
    const auto m = fixtures::random_matrix(n, n, 500 + n);
    const cd ref = brute_force_permanent(m);
    EXPECT_LT(std::abs(permanent(m) - ref), 1e-9 * std::abs(ref)) << "n=" << n;
  }
}

TEST(Permanent, RowMultilinearity) {
  const auto m = fixtures::random_matrix(5, 5, 77);
  const auto r = fixtures::random_matrix(1, 5, 78);
  ComplexMatrix a = m, b = m, sum = m;
  for (std::size_t j = 0; j < 5; ++j) {
    b(2, j) = r(0, j);
    sum(2, j) = m(2, j) + r(0, j);
  }
  const cd expect = permanent(a) + permanent(b);
  EXPECT_LT(std::abs(permanent(sum) - expect), 1e-10 * (1 + std::abs(expect)));
}

TEST(Permanent, PermutationInvariance) {
  const auto m = fixtures::random_matrix(6, 6, 91);
  const auto p = permutation_matrix({3, 0, 5, 1, 4, 2});
  const auto q = permutation_matrix({1, 2, 0, 5, 3, 4});
  const cd ref = permanent(m);
  EXPECT_LT(std::abs(permanent(p.transpose() * m * q) - ref), 1e-10 * std::abs(ref));
}

TEST(ApplyKron2, IdentityAndDiagonalAction) {
  const auto v = fixtures::random_vector(9, 4);
  const auto id = ComplexMatrix::identity(3);
  EXPECT_LT(fixtures::max_abs_diff(apply_kron2(id, id, v), v), 1e-15);
  const std::vector<cd> d{2.0, 1.0};
  const ComplexVector e0{1.0, 0.0, 0.0, 0.0};
  const auto out = apply_kron2(ComplexMatrix::diagonal(d), ComplexMatrix::identity(2), e0);
  EXPECT_EQ(out, (ComplexVector{2.0, 0.0, 0.0, 0.0}));
  EXPECT_THROW(apply_kron2(id, id, ComplexVector(8)), DimensionError);
}

TEST(ApplyKron2, MatchesDenseKron) {
  for (std::size_t x = 1; x <= 6; ++x) {
    const auto a = fixtures::random_matrix(x, x, 10 * x);
    const auto b = fixtures::random_matrix(x, x, 10 * x + 1);
    const auto v = fixtures::random_vector(x * x, 10 * x + 2);
    EXPECT_LT(fixtures::max_abs_diff(apply_kron2(a, b, v), kron(a, b) * v), 1e-12 * x * x);
  }
}

TEST(ApplySwap2, FixedPointsAndInvolution) {
  ComplexVector e01(4);
  e01[1] = 1.0;
  EXPECT_EQ(apply_swap2(e01), (ComplexVector{0.0, 0.0, 1.0, 0.0}));
  ComplexVector sym(9);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) sym[i * 3 + j] = cd(double(i + j), double(i * j));
  EXPECT_EQ(apply_swap2(sym), sym);
  const auto v = fixtures::random_vector(25, 8);
  EXPECT_EQ(apply_swap2(apply_swap2(v)), v);
  EXPECT_THROW(apply_swap2(ComplexVector(5)), DimensionError);
}
