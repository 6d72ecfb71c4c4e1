#pragma once

// n-boson layer on a ring of X sites. Configurations are multisets of site
// coordinates x in [-X/2+1, X/2]; output probabilities come from permanents
// of n x n submatrices of the evolution matrix.

#include <span>
#include <string>
#include <vector>

#include "noisygap/linalg.hpp"

namespace noisygap {

class SiteGrid {
 public:
  explicit SiteGrid(std::size_t size);  // even, >= 2
  std::size_t size() const noexcept { return size_; }
  long coordinate(std::size_t index) const;
  std::size_t index(long coordinate) const;  // throws DomainError outside the grid
  long min_coordinate() const noexcept { return -static_cast<long>(size_ / 2) + 1; }
  long max_coordinate() const noexcept { return static_cast<long>(size_ / 2); }

 private:
  std::size_t size_;
};

class FockConfiguration {
 public:
  FockConfiguration() = default;
  /// Positions are sorted; repeats mean multiple occupation.
  FockConfiguration(const SiteGrid& grid, std::vector<long> positions);

  const std::vector<long>& positions() const noexcept { return positions_; }
  std::size_t boson_count() const noexcept { return positions_.size(); }
  /// n_x indexed by site index.
  std::vector<unsigned> occupations(const SiteGrid& grid) const;
  /// "x1,x2,..." in ascending order.
  std::string label() const;

  friend bool operator==(const FockConfiguration&, const FockConfiguration&) = default;

 private:
  std::vector<long> positions_;
};

struct OutputDistribution {
  std::size_t size = 0;  // X
  std::vector<FockConfiguration> configs;  // every multiset of n sites, lexicographic
  std::vector<double> probs;
};

inline constexpr std::size_t kMaxBosons = 6;
inline constexpr std::size_t kMaxConfigurations = 1000000;

/// C(X + n - 1, n) configurations in lexicographic order; throws DomainError
/// when n or the count exceeds the enumeration bounds.
std::vector<FockConfiguration> enumerate_configurations(const SiteGrid& grid, std::size_t n);

/// Unnormalized |Per W|^2 / prod n_x^out! for one input/output pair.
double output_weight(const ComplexMatrix& m, const FockConfiguration& input, const FockConfiguration& output);

/// P(out) proportional to |Per W|^2 / prod n_x^out!, W[q][p] = m[x_q^out, x_p^in],
/// normalized over all outputs. The global scale of m cancels.
OutputDistribution output_distribution(const ComplexMatrix& m, const FockConfiguration& input);
OutputDistribution output_distribution(const ScaledProduct& acc, const FockConfiguration& input);

/// All n bosons in one mode: P = n! / prod n_x! * prod |phi(x)|^(2 n_x).
OutputDistribution bunching_prediction(std::span<const cd> mode, std::size_t n);

/// sum_config P(config) * (sum_x n_x x^2) / n.
double mean_x_squared(const OutputDistribution& dist);

/// sum |phi|^4 / (sum |phi|^2)^2; throws DomainError for the zero vector.
double ipr(std::span<const cd> mode);

/// (1/2) sum |p - q| over the same configuration list.
double total_variation(const OutputDistribution& a, const OutputDistribution& b);

}  // namespace noisygap
