#pragma once

// Spectral diagnostics of a running product V_t: the per-step gap Delta_t, the
// trace ratios Omega^lambda and Omega^Lambda, and the two leading Lyapunov
// exponents by block reorthogonalization.

#include <functional>
#include <optional>

#include "noisygap/linalg.hpp"
#include "noisygap/models.hpp"

namespace noisygap {

struct GapEstimate {
  std::size_t t = 0;
  double delta_t = 0.0;  // -ln|lambda_2 / lambda_1| / t
  bool flagged_defective = false;
  double residual = 0.0;
};

/// Throws DomainError for t = 0. Near-defective snapshots are flagged, not rejected.
GapEstimate gap_at(const ScaledProduct& acc, std::size_t t);
GapEstimate gap_from(const SpectralSnapshot& snap, std::size_t t);

struct OmegaPair {
  std::size_t t = 0;
  std::optional<double> omega_eig;  // empty when tr(V) = 0
  double omega_sv = 0.0;
};

/// Omega^lambda = |tr(V)^2 - tr(V^2)|^2 / |tr V|^4 and
/// Omega^Lambda = (tr(W)^2 - tr(W^2)) / tr(W)^2 with W = V^dagger V.
OmegaPair omega_pair(const ScaledProduct& acc, std::size_t t);

/// Omega^lambda from the core alone; empty when the trace vanishes.
std::optional<double> omega_eig(const ComplexMatrix& core);

/// Omega^Lambda from singular values: 2 sum_{i<j} s_i^2 s_j^2 / (sum s_i^2)^2.
/// Same value as the trace expression without its cancellation near rank one.
double omega_sv(std::span<const double> singular_values);

struct LyapunovOptions {
  std::size_t block_length = 1000;  // M
  std::size_t block_count = 1000;   // T
  std::size_t burn_in = 10;         // leading blocks left out of the averages
};

struct LyapunovEstimate {
  std::size_t t = 0;  // T * M
  double e1 = 0.0;
  double e2 = 0.0;
  std::size_t block_length = 0;
  std::size_t block_count = 0;
  std::size_t burn_in = 0;
  std::size_t clamped_blocks = 0;  // blocks whose second direction degenerated

  double gap() const noexcept { return e1 - e2; }
};

inline constexpr double kSinThetaFloor = 1e-150;

/// Advances the X x 2 matrix of evolving vectors by step t (t starts at 1).
using BlockStepper = std::function<void(std::size_t t, ComplexMatrix& w)>;

LyapunovEstimate lyapunov_pair(const NoisyModel& model, const LyapunovOptions& options);
LyapunovEstimate lyapunov_pair(const ModelSpec& spec, std::size_t block_length, std::size_t block_count,
                               std::size_t burn_in = 10);

/// Same iteration for an arbitrary step; initial vectors are drawn from `seed`.
LyapunovEstimate lyapunov_pair(std::size_t dim, const BlockStepper& step, const LyapunovOptions& options,
                               std::uint64_t seed);

}  // namespace noisygap
