#include "noisygap/fock.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "noisygap/error.hpp"

namespace noisygap {
namespace {

double factorial(unsigned k) {
  double f = 1.0;
  for (unsigned i = 2; i <= k; ++i) f *= i;
  return f;
}

// C(X + n - 1, n), saturating at max + 1.
std::size_t multiset_count(std::size_t x, std::size_t n, std::size_t cap) {
  double c = 1.0;
  for (std::size_t k = 1; k <= n; ++k) {
    c = c * static_cast<double>(x + k - 1) / static_cast<double>(k);
    if (c > static_cast<double>(cap)) return cap + 1;
  }
  return static_cast<std::size_t>(std::llround(c));
}

void normalize(std::vector<double>& w, const char* who) {
  double total = 0.0;
  for (double v : w) total += v;
  if (!(total > 0.0) || !std::isfinite(total))
    throw NumericalError(std::string(who) + ": configuration weights sum to " + std::to_string(total));
  for (double& v : w) v /= total;
}

}  // namespace

SiteGrid::SiteGrid(std::size_t size) : size_(size) {
  if (size < 2 || size % 2 != 0) throw DomainError("SiteGrid: size must be even and >= 2");
}

long SiteGrid::coordinate(std::size_t index) const {
  if (index >= size_) throw DomainError("SiteGrid: index " + std::to_string(index) + " out of range");
  return static_cast<long>(index) + min_coordinate();
}

std::size_t SiteGrid::index(long coordinate) const {
  if (coordinate < min_coordinate() || coordinate > max_coordinate())
    throw DomainError("site coordinate " + std::to_string(coordinate) + " outside [" +
                      std::to_string(min_coordinate()) + ", " + std::to_string(max_coordinate()) + "]");
  return static_cast<std::size_t>(coordinate - min_coordinate());
}

FockConfiguration::FockConfiguration(const SiteGrid& grid, std::vector<long> positions)
    : positions_(std::move(positions)) {
  for (long x : positions_) grid.index(x);
  std::sort(positions_.begin(), positions_.end());
}

std::vector<unsigned> FockConfiguration::occupations(const SiteGrid& grid) const {
  std::vector<unsigned> n(grid.size(), 0);
  for (long x : positions_) ++n[grid.index(x)];
  return n;
}

std::string FockConfiguration::label() const {
  std::string s;
  for (std::size_t i = 0; i < positions_.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(positions_[i]);
  }
  return s;
}

std::vector<FockConfiguration> enumerate_configurations(const SiteGrid& grid, std::size_t n) {
  if (n == 0 || n > kMaxBosons)
    throw DomainError("boson count " + std::to_string(n) + " outside the enumeration bound [1, " +
                      std::to_string(kMaxBosons) + "]");
  const std::size_t count = multiset_count(grid.size(), n, kMaxConfigurations);
  if (count > kMaxConfigurations)
    throw DomainError("C(X+n-1, n) exceeds the enumeration bound of " + std::to_string(kMaxConfigurations) +
                      " configurations");
  std::vector<FockConfiguration> out;
  out.reserve(count);
  std::vector<std::size_t> idx(n, 0);
  while (true) {
    std::vector<long> pos(n);
    for (std::size_t i = 0; i < n; ++i) pos[i] = grid.coordinate(idx[i]);
    out.emplace_back(grid, std::move(pos));
    // Next nondecreasing index tuple.
    std::size_t k = n;
    while (k > 0 && idx[k - 1] == grid.size() - 1) --k;
    if (k == 0) break;
    ++idx[k - 1];
    for (std::size_t j = k; j < n; ++j) idx[j] = idx[k - 1];
  }
  return out;
}

double output_weight(const ComplexMatrix& m, const FockConfiguration& input, const FockConfiguration& output) {
  if (!m.is_square()) throw DimensionError("output_weight: matrix must be square");
  const std::size_t n = input.boson_count();
  if (output.boson_count() != n) throw DimensionError("output_weight: boson numbers differ");
  const SiteGrid grid(m.rows());
  const auto& in = input.positions();
  const auto& out = output.positions();
  ComplexMatrix w(n, n);
  double multiplicity = 1.0;
  unsigned run = 1;
  for (std::size_t q = 0; q < n; ++q) {
    const std::size_t row = grid.index(out[q]);
    for (std::size_t p = 0; p < n; ++p) w(q, p) = m(row, grid.index(in[p]));
    if (q > 0 && out[q] == out[q - 1]) {
      ++run;
      multiplicity *= run;
    } else {
      run = 1;
    }
  }
  return std::norm(permanent(w)) / multiplicity;
}

OutputDistribution output_distribution(const ComplexMatrix& m, const FockConfiguration& input) {
  if (!m.is_square()) throw DimensionError("output_distribution: matrix must be square");
  const SiteGrid grid(m.rows());
  OutputDistribution dist;
  dist.size = grid.size();
  dist.configs = enumerate_configurations(grid, input.boson_count());
  dist.probs.resize(dist.configs.size());
  for (std::size_t c = 0; c < dist.configs.size(); ++c) dist.probs[c] = output_weight(m, input, dist.configs[c]);
  normalize(dist.probs, "output_distribution");
  return dist;
}

OutputDistribution output_distribution(const ScaledProduct& acc, const FockConfiguration& input) {
  return output_distribution(acc.core(), input);
}

OutputDistribution bunching_prediction(std::span<const cd> mode, std::size_t n) {
  const SiteGrid grid(mode.size());
  OutputDistribution dist;
  dist.size = grid.size();
  dist.configs = enumerate_configurations(grid, n);
  dist.probs.resize(dist.configs.size());
  const double nfact = factorial(static_cast<unsigned>(n));
  for (std::size_t c = 0; c < dist.configs.size(); ++c) {
    double p = nfact;
    for (long x : dist.configs[c].positions()) p *= std::norm(mode[grid.index(x)]);
    for (unsigned k : dist.configs[c].occupations(grid)) p /= factorial(k);
    dist.probs[c] = p;
  }
  normalize(dist.probs, "bunching_prediction");
  return dist;
}

double mean_x_squared(const OutputDistribution& dist) {
  double total = 0.0;
  for (std::size_t c = 0; c < dist.configs.size(); ++c) {
    const auto& pos = dist.configs[c].positions();
    double x2 = 0.0;
    for (long x : pos) x2 += static_cast<double>(x) * static_cast<double>(x);
    total += dist.probs[c] * x2 / static_cast<double>(pos.size());
  }
  return total;
}

double ipr(std::span<const cd> mode) {
  double s2 = 0.0, s4 = 0.0;
  for (const cd& v : mode) {
    const double a = std::norm(v);
    s2 += a;
    s4 += a * a;
  }
  if (!(s2 > 0.0)) throw DomainError("ipr: zero vector");
  return s4 / (s2 * s2);
}

double total_variation(const OutputDistribution& a, const OutputDistribution& b) {
  if (a.configs != b.configs) throw DimensionError("total_variation: distributions over different configurations");
  double s = 0.0;
  for (std::size_t i = 0; i < a.probs.size(); ++i) s += std::abs(a.probs[i] - b.probs[i]);
  return 0.5 * s;
}

}  // namespace noisygap
