#include <gtest/gtest.h>

#include <vector>

#include "noisygap/kernels.hpp"
#include "support.hpp"

using namespace noisygap;
namespace k = noisygap::kernels;

namespace {

std::vector<k::Isa> variants() {
  std::vector<k::Isa> out{k::Isa::kScalar};
  if (k::available(k::Isa::kAvx2)) out.push_back(k::Isa::kAvx2);
  return out;
}

class KernelEquivalence : public ::testing::TestWithParam<std::size_t> {};

}  // namespace

TEST_P(KernelEquivalence, GemmMatchesScalar) {
  const std::size_t n = GetParam();
  const auto a = fixtures::random_matrix(n, n + 1, 11 + n);
  const auto b = fixtures::random_matrix(n + 1, n + 2, 17 + n);
  std::vector<cd> ref(n * (n + 2));
  k::table(k::Isa::kScalar).gemm(a.data(), b.data(), ref.data(), n, n + 1, n + 2);
  for (auto isa : variants()) {
    std::vector<cd> out(ref.size());
    k::table(isa).gemm(a.data(), b.data(), out.data(), n, n + 1, n + 2);
    EXPECT_LT(fixtures::max_abs_diff(out, ref), 1e-12 * (n + 1)) << k::isa_name(isa);
  }
}

TEST_P(KernelEquivalence, PairCombineMatchesScalar) {
  const std::size_t n = GetParam();
  auto a0 = fixtures::random_vector(n, 3 + n);
  auto b0 = fixtures::random_vector(n, 5 + n);
  const k::Block2 blk{{cd(0.3, 0.1), cd(-0.2, 0.7), cd(1.1, -0.4), cd(0.05, 0.9)}};
  auto ra = a0, rb = b0;
  k::table(k::Isa::kScalar).pair_combine(ra.data(), rb.data(), n, blk);
  for (std::size_t j = 0; j < n; ++j) {
    EXPECT_NEAR(std::abs(ra[j] - (blk.m[0] * a0[j] + blk.m[1] * b0[j])), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(rb[j] - (blk.m[2] * a0[j] + blk.m[3] * b0[j])), 0.0, 1e-14);
  }
  for (auto isa : variants()) {
    auto a = a0, b = b0;
    k::table(isa).pair_combine(a.data(), b.data(), n, blk);
    EXPECT_LT(fixtures::max_abs_diff(a, ra), 1e-14);
    EXPECT_LT(fixtures::max_abs_diff(b, rb), 1e-14);
  }
}

TEST_P(KernelEquivalence, ReductionsMatchScalar) {
  const std::size_t n = GetParam();
  const auto x = fixtures::random_vector(n, 7 + n);
  const auto y = fixtures::random_vector(n, 9 + n);
  std::vector<double> ref(n, 0.5);
  k::table(k::Isa::kScalar).accumulate_abs2(x.data(), ref.data(), n);
  double rre = 0, rim = 0;
  k::table(k::Isa::kScalar).dot(x.data(), y.data(), n, &rre, &rim);
  cd direct = 0;
  for (std::size_t j = 0; j < n; ++j) direct += std::conj(x[j]) * y[j];
  EXPECT_NEAR(rre, direct.real(), 1e-12 * (n + 1));
  EXPECT_NEAR(rim, direct.imag(), 1e-12 * (n + 1));
  for (auto isa : variants()) {
    std::vector<double> acc(n, 0.5);
    k::table(isa).accumulate_abs2(x.data(), acc.data(), n);
    for (std::size_t j = 0; j < n; ++j) EXPECT_NEAR(acc[j], ref[j], 1e-13);
    double re = 0, im = 0;
    k::table(isa).dot(x.data(), y.data(), n, &re, &im);
    EXPECT_NEAR(re, rre, 1e-12 * (n + 1));
    EXPECT_NEAR(im, rim, 1e-12 * (n + 1));
    auto s = x;
    k::table(isa).scale(s.data(), n, -2.5);
    for (std::size_t j = 0; j < n; ++j) EXPECT_EQ(s[j], -2.5 * x[j]);
  }
}

// Odd sizes exercise the scalar tails of the vector loops.
INSTANTIATE_TEST_SUITE_P(Sizes, KernelEquivalence, ::testing::Values(1, 2, 3, 5, 8, 13, 20, 41));

TEST(KernelDispatch, ForceSwitchesTable) {
  const auto before = k::active_isa();
  k::force(k::Isa::kScalar);
  EXPECT_EQ(k::active_isa(), k::Isa::kScalar);
  EXPECT_STREQ(k::active().name, "scalar");
  k::force(before);
  EXPECT_EQ(k::active_isa(), before);
}

TEST(KernelDispatch, ProductIdenticalAcrossIsaUpToRounding) {
  const auto a = fixtures::random_matrix(20, 20, 1);
  const auto b = fixtures::random_matrix(20, 20, 2);
  const auto before = k::active_isa();
  k::force(k::Isa::kScalar);
  const auto ref = a * b;
  for (auto isa : variants()) {
    k::force(isa);
    EXPECT_LT(max_abs_diff(a * b, ref), 1e-12);
  }
  k::force(before);
}
