#pragma once

// Noise-averaged tensor powers of the one-step matrix and the quantities
// derived from them:
//
//   two-fold   Q2 = avg(Q (x) Q*)                 acting on X^2 vectors, top eigenvalue mu
//   four-fold  Q4 = avg((Q (x) Q) (x) (Q (x) Q)*) acting on X^4 vectors, axes (a1, a2, b1, b2)
//   S = (I - swap_a) (x) (I - swap_b), so S/4 is the product of the two antisymmetrizers;
//   nu is the top eigenvalue of Q4 S / 4.
//
// Both averages factor as G U with U = U (x) U* (resp. U (x) U (x) U* (x) U*) and
// G = H^{(x)k} diag(g-table) H^{(x)k}; the diagonal entry for tensor index
// (i_1..i_k) is prod over noise cells of g(beta |sum of signs of the legs in that cell|),
// with g(b) = avg_z exp(b z) = sinh(b/2)/(b/2) for z uniform on [-1/2, 1/2).

#include <functional>
#include <optional>

#include "noisygap/linalg.hpp"
#include "noisygap/models.hpp"

namespace noisygap {

/// sinh(b/2) / (b/2), with g(0) = 1.
double g_factor(double beta);

/// Matrix-free noise-averaged k-fold tensor power (k = 2 or 4) of Q = G U.
class ExtendedOperator {
 public:
  ExtendedOperator(const NoisyModel& model, std::size_t order);

  std::size_t size() const noexcept { return size_; }      // X
  std::size_t order() const noexcept { return order_; }    // k
  std::size_t dim() const noexcept { return table_.size(); }  // X^k

  /// out = op * in; buffers must not alias.
  void apply(std::span<const cd> in, std::span<cd> out) const;
  ComplexVector apply(std::span<const cd> in) const;

  /// Diagonal of the averaged noise layer in the noise eigenbasis.
  std::span<const double> noise_table() const noexcept { return table_; }

  /// Dense matrix built column by column from apply(); for small X only.
  ComplexMatrix dense() const;

 private:
  void apply_axis(std::span<cd> v, std::size_t axis, const PairLayer& layer, bool conjugate) const;

  std::size_t size_;
  std::size_t order_;
  std::vector<PairLayer> unitary_layers_;
  PairLayer basis_;
  std::vector<double> table_;
};

/// Largest dense representation of the two-fold operator that is stored:
/// (X^2)^2 <= 4e4 entries, i.e. X <= 14.
inline constexpr std::size_t kDenseTwofoldEntries = 40000;

struct TwoFoldOperator {
  ExtendedOperator factored;
  std::optional<ComplexMatrix> dense;
};

TwoFoldOperator build_twofold(const ModelSpec& spec);

/// Q4 with the S/4 projection applied first (the two commute).
class FourFoldOperator {
 public:
  explicit FourFoldOperator(const NoisyModel& model) : q_(model, 4) {}
  std::size_t size() const noexcept { return q_.size(); }
  std::size_t dim() const noexcept { return q_.dim(); }
  void apply(std::span<const cd> in, std::span<cd> out) const { q_.apply(in, out); }
  /// out = (S/4) in.
  void project(std::span<const cd> in, std::span<cd> out) const;
  /// out = Q4 (S/4) in.
  void apply_projected(std::span<const cd> in, std::span<cd> out) const;
  const ExtendedOperator& unprojected() const noexcept { return q_; }

 private:
  ExtendedOperator q_;
};

struct PowerIterationOptions {
  double tolerance = 1e-10;           // on the change of the Rayleigh quotient
  double residual_tolerance = 1e-8;   // on |A x - theta x| / |theta|, unit x
  std::size_t max_iterations = 100000;
};

struct EigenEstimate {
  cd value;
  std::size_t iterations = 0;
  double residual = 0.0;  // |A x - value x| for the final unit x
};

/// Dominant eigenvalue of a linear map by power iteration from `start`.
/// With |lambda_2 / lambda_1| close to one the Rayleigh quotient creeps, so a
/// small change alone is not enough; the residual must be small as well.
/// Throws NumericalError (carrying the last residual in the message) at the cap.
EigenEstimate power_iteration(const std::function<void(std::span<const cd>, std::span<cd>)>& apply,
                              ComplexVector start, const PowerIterationOptions& options = {});

/// Largest eigenvalue of the two-fold operator: dense eigendecomposition when
/// stored, otherwise power iteration from vec(I).
double mu_of(const TwoFoldOperator& op, const PowerIterationOptions& options = {});
double mu_power(const ExtendedOperator& op, const PowerIterationOptions& options = {});

/// Largest eigenvalue of Q4 S/4 by power iteration from (S/4) applied to the
/// identity pairing delta(a1,b1) delta(a2,b2). Both maps are completely
/// positive, so the Perron eigenvector is positive semidefinite and has a
/// strictly positive overlap with the (projected) identity.
double nu_of(const ModelSpec& spec, const PowerIterationOptions& options = {});
double nu_power(const FourFoldOperator& op, const PowerIterationOptions& options = {});

/// Rates closer to zero than this count as zero (bound unbounded).
inline constexpr double kRateZeroTolerance = 1e-9;

/// ln(sqrt(nu) / mu); throws DomainError unless mu, nu > 0.
double cs_bound_rate(double mu, double nu);
/// |ln c / rate|, +infinity when the rate vanishes; throws DomainError for c outside (0, 1).
double tau_omega_eig(double mu, double nu, double c);

struct PerturbationPrediction {
  double trace = 0.0;   // tr[2 avg(B^dagger B) + avg((A^dagger B)^2) + avg((B^dagger A)^2)]
  double slope = 0.0;   // d avg(ln Omega^Lambda) / dt = -trace beta^2 / X^2
  double tau_omega_sv = 0.0;
  std::optional<double> tau_omega_eig;
};

/// Small-beta slope of avg(ln Omega^Lambda). The average over noise uses
/// avg(z_a z_b) = delta_ab / 12 exactly.
double perturbative_trace(const ModelSpec& spec);
double perturbative_slope(const ModelSpec& spec);

/// First t at which slope t / 2 - ln sqrt(2) reaches ln c, i.e. 2 |ln c + ln sqrt 2| / |slope|.
double tau_omega_sv(double slope, double c);

/// Slope and tau_Omega^Lambda; with `with_bound` also tau_Omega^lambda from mu and nu.
PerturbationPrediction predict(const ModelSpec& spec, double c, bool with_bound);

}  // namespace noisygap
