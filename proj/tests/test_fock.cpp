#include <gtest/gtest.h>

#include <cmath>

#include "noisygap/error.hpp"
#include "noisygap/fock.hpp"
#include "support.hpp"

using namespace noisygap;

namespace {

double prob_of(const OutputDistribution& d, const std::string& label) {
  for (std::size_t i = 0; i < d.configs.size(); ++i)
    if (d.configs[i].label() == label) return d.probs[i];
  ADD_FAILURE() << "no configuration " << label;
  return NAN;
}

double total(const OutputDistribution& d) {
  double s = 0;
  for (double p : d.probs) s += p;
  return s;
}

ComplexMatrix random_unit_rank_one(std::size_t n, std::uint64_t seed, ComplexVector& mode) {
  mode = fixtures::random_vector(n, seed);
  const double nm = norm2(mode);
  for (auto& v : mode) v /= nm;
  const auto other = fixtures::random_vector(n, seed + 1);
  ComplexMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m(i, j) = mode[i] * std::conj(other[j]);
  return m;
}

}  // namespace

TEST(SiteGrid, CoordinatesCoverSymmetricRange) {
  const SiteGrid g(20);
  EXPECT_EQ(g.coordinate(0), -9);
  EXPECT_EQ(g.coordinate(19), 10);
  for (long x = -9; x <= 10; ++x) EXPECT_EQ(g.coordinate(g.index(x)), x);
  EXPECT_THROW(g.index(11), DomainError);
  EXPECT_THROW(SiteGrid(5), DomainError);
}

TEST(FockConfiguration, SortedWithOccupations) {
  const SiteGrid g(6);
  const FockConfiguration c(g, {2, -1, 2});
  EXPECT_EQ(c.label(), "-1,2,2");
  const auto occ = c.occupations(g);
  EXPECT_EQ(occ[g.index(2)], 2u);
  EXPECT_EQ(occ[g.index(-1)], 1u);
  EXPECT_THROW(FockConfiguration(g, {4}), DomainError);
}

TEST(Enumerate, CountsAndBounds) {
  const SiteGrid g(20);
  EXPECT_EQ(enumerate_configurations(g, 3).size(), 1540u);
  EXPECT_EQ(enumerate_configurations(g, 1).size(), 20u);
  const auto two = enumerate_configurations(SiteGrid(4), 2);
  EXPECT_EQ(two.size(), 10u);
  EXPECT_EQ(two.front().label(), "-1,-1");
  EXPECT_EQ(two.back().label(), "2,2");
  EXPECT_THROW(enumerate_configurations(g, 7), DomainError);
  EXPECT_THROW(enumerate_configurations(SiteGrid(40), 6), DomainError);
}

TEST(OutputDistribution, IdentityKeepsInput) {
  const SiteGrid g(8);
  const auto d = output_distribution(ComplexMatrix::identity(8), FockConfiguration(g, {-2, 3}));
  EXPECT_NEAR(prob_of(d, "-2,3"), 1.0, 1e-15);
  EXPECT_NEAR(total(d), 1.0, 1e-12);
}

TEST(OutputDistribution, HongOuMandel) {
  const double r = 1.0 / std::sqrt(2.0);
  const ComplexMatrix bs{{r, r}, {r, -r}};
  const SiteGrid g(2);
  const auto d = output_distribution(bs, FockConfiguration(g, {0, 1}));
  EXPECT_LT(prob_of(d, "0,1"), 1e-12);
  EXPECT_NEAR(prob_of(d, "0,0"), 0.5, 1e-12);
  EXPECT_NEAR(prob_of(d, "1,1"), 0.5, 1e-12);
}

TEST(OutputDistribution, SingleParticle) {
  const auto m = fixtures::random_matrix(6, 6, 3);
  const SiteGrid g(6);
  const auto d = output_distribution(m, FockConfiguration(g, {1}));
  const std::size_t in = g.index(1);
  double norm = 0;
  for (std::size_t y = 0; y < 6; ++y) norm += std::norm(m(y, in));
  for (std::size_t x = 0; x < 6; ++x) EXPECT_NEAR(d.probs[x], std::norm(m(x, in)) / norm, 1e-14);
}

TEST(OutputDistribution, UnitaryWeightsNeedNoRenormalization) {
  // Right modes of a Hermitian matrix form a unitary.
  const auto h = fixtures::random_matrix(6, 6, 8);
  const auto u = eig_sorted(h + h.adjoint(), false).right_modes;
  const SiteGrid g(6);
  for (long x = -2; x <= 3; ++x) {
    double s = 0;
    for (const auto& out : enumerate_configurations(g, 1)) s += output_weight(u, FockConfiguration(g, {x}), out);
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
  // Two bosons on one site: the weights sum to prod n_in! = 2.
  double s = 0;
  for (const auto& out : enumerate_configurations(g, 2)) s += output_weight(u, FockConfiguration(g, {1, 1}), out);
  EXPECT_NEAR(s, 2.0, 1e-12);
}

TEST(OutputDistribution, InputOrderIrrelevantAndNormalized) {
  const auto m = fixtures::random_matrix(8, 8, 12);
  const SiteGrid g(8);
  const auto a = output_distribution(m, FockConfiguration(g, {3, -2, 0}));
  const auto b = output_distribution(m, FockConfiguration(g, {0, 3, -2}));
  EXPECT_EQ(a.probs, b.probs);
  EXPECT_NEAR(total(a), 1.0, 1e-9);
  for (double p : a.probs) EXPECT_GE(p, 0.0);
  // Scale of the matrix cancels.
  const auto c = output_distribution(cd(1e5) * m, FockConfiguration(g, {3, -2, 0}));
  for (std::size_t i = 0; i < a.probs.size(); ++i) EXPECT_NEAR(a.probs[i], c.probs[i], 1e-12);
}

TEST(OutputDistribution, RankOneMatrixIsExactlyBunched) {
  ComplexVector mode;
  const auto m = random_unit_rank_one(8, 40, mode);
  const SiteGrid g(8);
  const auto d = output_distribution(m, FockConfiguration(g, {-3, 0, 4}));
  EXPECT_LT(total_variation(d, bunching_prediction(mode, 3)), 1e-12);
}

TEST(OutputDistribution, RankOneTruncationErrorShrinksWithRatio) {
  const std::size_t n = 8;
  const auto r = fixtures::random_matrix(n, n, 90);
  const auto s = eig_sorted(r, true);
  const auto& left = *s.left_modes;
  const SiteGrid g(n);
  const FockConfiguration input(g, {-1, 0, 1});
  double prev = 1.0;
  for (double eps : {1e-1, 1e-2, 1e-3, 1e-4}) {
    std::vector<cd> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = std::pow(eps, double(i)) * (i % 2 ? cd(0.3, 0.9) : cd(1.0, 0.0));
    const auto m = s.right_modes * ComplexMatrix::diagonal(d) * left;
    const auto tv = total_variation(output_distribution(m, input), bunching_prediction(s.right_modes.column(0), 3));
    EXPECT_LT(tv, prev);
    EXPECT_LT(tv, 200 * eps);
    prev = tv;
  }
}

TEST(MeanXSquared, ClosedForms) {
  const SiteGrid g(8);
  const auto one = output_distribution(ComplexMatrix::identity(8), FockConfiguration(g, {-3}));
  EXPECT_NEAR(mean_x_squared(one), 9.0, 1e-14);
  const auto three = output_distribution(ComplexMatrix::identity(8), FockConfiguration(g, {-1, 0, 1}));
  EXPECT_NEAR(mean_x_squared(three), 2.0 / 3.0, 1e-14);
}

TEST(Ipr, Limits) {
  const ComplexVector uniform(10, cd(0.3, -0.1));
  EXPECT_NEAR(ipr(uniform), 0.1, 1e-15);
  ComplexVector site(10);
  site[4] = cd(0, 2);
  EXPECT_NEAR(ipr(site), 1.0, 1e-15);
  EXPECT_THROW(ipr(ComplexVector(5)), DomainError);
  const double v = ipr(fixtures::random_vector(10, 1));
  EXPECT_GE(v, 0.1);
  EXPECT_LE(v, 1.0);
}

TEST(BunchingPrediction, SingleBosonAndConcentratedMode) {
  auto mode = fixtures::random_vector(6, 5);
  const double nm = norm2(mode);
  for (auto& v : mode) v /= nm;
  const auto d1 = bunching_prediction(mode, 1);
  for (std::size_t x = 0; x < 6; ++x) EXPECT_NEAR(d1.probs[x], std::norm(mode[x]), 1e-15);
  ComplexVector point(6);
  point[2] = 1.0;
  const auto d3 = bunching_prediction(point, 3);
  EXPECT_NEAR(prob_of(d3, "0,0,0"), 1.0, 1e-15);
  EXPECT_NEAR(total(bunching_prediction(mode, 4)), 1.0, 1e-12);
}
