#include "noisygap/spectral.hpp"

#include <cmath>
#include <string>

#include "noisygap/error.hpp"
#include "noisygap/rng.hpp"

namespace noisygap {
namespace {

double column_norm(const ComplexMatrix& w, std::size_t j) {
  double s = 0.0;
  for (std::size_t i = 0; i < w.rows(); ++i) s += std::norm(w(i, j));
  return std::sqrt(s);
}

void scale_column(ComplexMatrix& w, std::size_t j, double s) {
  for (std::size_t i = 0; i < w.rows(); ++i) w(i, j) *= s;
}

// Removes the component of column 1 along the unit column 0 and returns the
// norm of what is left.
double orthogonalize(ComplexMatrix& w) {
  cd proj = 0.0;
  for (std::size_t i = 0; i < w.rows(); ++i) proj += std::conj(w(i, 0)) * w(i, 1);
  for (std::size_t i = 0; i < w.rows(); ++i) w(i, 1) -= proj * w(i, 0);
  return column_norm(w, 1);
}

void random_column(ComplexMatrix& w, std::size_t j, std::uint64_t seed, std::uint64_t step) {
  const rng::Stream s(seed, rng::Domain::kInitial, step);
  for (std::size_t i = 0; i < w.rows(); ++i) {
    const auto k = static_cast<std::uint32_t>(2 * i);
    w(i, j) = cd(s.normal(k), s.normal(k + 1));
  }
}

// Fresh unit second column orthogonal to the first.
void reseed_second(ComplexMatrix& w, std::uint64_t seed, std::uint64_t& draws) {
  for (int attempt = 0; attempt < 8; ++attempt) {
    random_column(w, 1, seed, ++draws);
    const double n = orthogonalize(w);
    if (n > 1e-8) {
      scale_column(w, 1, 1.0 / n);
      return;
    }
  }
  throw NumericalError("lyapunov_pair: cannot draw a second direction");
}

}  // namespace

GapEstimate gap_from(const SpectralSnapshot& snap, std::size_t t) {
  if (t == 0) throw DomainError("gap_at: t must be at least 1");
  if (snap.eigenvalues.size() < 2) throw DimensionError("gap_at: need at least two eigenvalues");
  GapEstimate g;
  g.t = t;
  g.delta_t = -std::log(std::abs(snap.eigenvalues[1]) / std::abs(snap.eigenvalues[0])) / static_cast<double>(t);
  g.flagged_defective = snap.near_defective;
  g.residual = snap.biorthogonality_residual;
  return g;
}

GapEstimate gap_at(const ScaledProduct& acc, std::size_t t) {
  if (t == 0) throw DomainError("gap_at: t must be at least 1");
  return gap_from(eig_sorted(acc.core(), true, DefectivePolicy::kFlag, t), t);
}

std::optional<double> omega_eig(const ComplexMatrix& core) {
  if (!core.is_square()) throw DimensionError("omega_eig: matrix must be square");
  const std::size_t n = core.rows();
  const cd tr = core.trace();
  if (tr == cd(0.0)) return std::nullopt;
  cd tr2 = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) tr2 += core(i, j) * core(j, i);
  // |(tr^2 - tr(V^2)) / tr^2|^2 avoids forming |tr|^4.
  return std::norm((tr * tr - tr2) / (tr * tr));
}

double omega_sv(std::span<const double> singular_values) {
  double total = 0.0, pairs = 0.0;
  for (double s : singular_values) {
    const double a = s * s;
    pairs += a * total;
    total += a;
  }
  if (!(total > 0.0)) throw NumericalError("omega_sv: all singular values vanish");
  return 2.0 * pairs / (total * total);
}

OmegaPair omega_pair(const ScaledProduct& acc, std::size_t t) {
  if (t == 0) throw DomainError("omega_pair: t must be at least 1");
  OmegaPair out;
  out.t = t;
  out.omega_eig = omega_eig(acc.core());
  out.omega_sv = omega_sv(svd_sorted(acc.core(), t).singular_values);
  return out;
}

LyapunovEstimate lyapunov_pair(std::size_t dim, const BlockStepper& step, const LyapunovOptions& options,
                               std::uint64_t seed) {
  const std::size_t m = options.block_length, blocks = options.block_count;
  if (m == 0 || blocks == 0) throw DomainError("lyapunov_pair: block length and count must be at least 1");
  if (options.burn_in >= blocks)
    throw DomainError("lyapunov_pair: burn-in (" + std::to_string(options.burn_in) +
                      ") must be smaller than the block count (" + std::to_string(blocks) + ")");
  if (dim < 2) throw DimensionError("lyapunov_pair: need dimension >= 2");

  ComplexMatrix w(dim, 2);
  std::uint64_t draws = 0;
  random_column(w, 0, seed, draws);
  scale_column(w, 0, 1.0 / column_norm(w, 0));
  reseed_second(w, seed, draws);

  // Columns are rescaled inside a block so long blocks cannot overflow; the
  // removed factors are kept in log form.
  constexpr double kRescaleAbove = 1e100, kRescaleBelow = 1e-100;
  LyapunovEstimate est;
  est.block_length = m;
  est.block_count = blocks;
  est.burn_in = options.burn_in;
  est.t = m * blocks;
  double sum1 = 0.0, sum2 = 0.0;
  std::size_t t = 0;
  for (std::size_t s = 0; s < blocks; ++s) {
    double log1 = 0.0, log2 = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      step(++t, w);
      if ((k & 31) == 31) {
        for (std::size_t j = 0; j < 2; ++j) {
          const double n = column_norm(w, j);
          if (n > kRescaleAbove || (n < kRescaleBelow && n > 0.0)) {
            scale_column(w, j, 1.0 / n);
            (j == 0 ? log1 : log2) += std::log(n);
          }
        }
      }
    }
    const double nu = column_norm(w, 0);
    if (!(nu > 0.0) || !std::isfinite(nu)) throw NumericalError("lyapunov_pair: evolved vector has norm " + std::to_string(nu));
    scale_column(w, 0, 1.0 / nu);
    const double nw2 = column_norm(w, 1);
    if (!std::isfinite(nw2)) throw NumericalError("lyapunov_pair: second vector is not finite");
    const double nv = orthogonalize(w);
    const double ln_u = log1 + std::log(nu);
    double ln_v;
    if (!(nw2 > 0.0) || nv < kSinThetaFloor * nw2) {
      ++est.clamped_blocks;
      ln_v = log2 + std::log(nw2 > 0.0 ? nw2 : 1.0) + std::log(kSinThetaFloor);
      reseed_second(w, seed, draws);
    } else {
      ln_v = log2 + std::log(nv);
      scale_column(w, 1, 1.0 / nv);
      // A remainder made of rounding noise can still lie along the first
      // vector; such a direction carries no information and is redrawn.
      const double again = orthogonalize(w);
      if (again < 0.5) {
        ++est.clamped_blocks;
        reseed_second(w, seed, draws);
      } else {
        scale_column(w, 1, 1.0 / again);
      }
    }
    if (s >= options.burn_in) {
      sum1 += ln_u;
      sum2 += ln_u + ln_v;
    }
  }
  const double steps = static_cast<double>((blocks - options.burn_in) * m);
  est.e1 = sum1 / steps;
  est.e2 = sum2 / steps - est.e1;
  return est;
}

LyapunovEstimate lyapunov_pair(const NoisyModel& model, const LyapunovOptions& options) {
  std::vector<double> z(model.spec().noise_count());
  const BlockStepper step = [&](std::size_t t, ComplexMatrix& w) {
    model.fill_noise(t, z);
    model.apply_step(std::span<const double>(z), w);
  };
  return lyapunov_pair(model.size(), step, options, model.spec().seed);
}

LyapunovEstimate lyapunov_pair(const ModelSpec& spec, std::size_t block_length, std::size_t block_count,
                               std::size_t burn_in) {
  return lyapunov_pair(NoisyModel(spec), LyapunovOptions{block_length, block_count, burn_in});
}

}  // namespace noisygap
