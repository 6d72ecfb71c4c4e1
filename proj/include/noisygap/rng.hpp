#pragma once

// Counter-based random numbers: Philox4x32-10. A draw is a pure function of
// (key, counter), so any step of any trajectory can be regenerated without
// replaying earlier steps and parallel workers never share state.

#include <array>
#include <cstdint>
#include <span>

namespace noisygap::rng {

using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

Counter philox4x32_10(Counter counter, Key key) noexcept;

/// Stream domains keep independent uses of one seed apart.
enum class Domain : std::uint32_t {
  kNoise = 0x6e6f6973,     // per-step noise variables
  kInitial = 0x696e6974,   // initial vectors of the Lyapunov iteration
  kOperator = 0x6f706572,  // start vectors of power iterations
};

/// Uniform doubles keyed by (seed, domain, step). Each call to the block
/// function yields two 53-bit doubles.
class Stream {
 public:
  Stream(std::uint64_t seed, Domain domain, std::uint64_t step) noexcept;

  /// i-th uniform in [0, 1) of this (seed, domain, step).
  double uniform(std::uint32_t index) const noexcept;

  /// i-th uniform in [-1/2, 1/2).
  double centered(std::uint32_t index) const noexcept { return uniform(index) - 0.5; }

  /// out[i] = centered(i) for every i, one block evaluation per pair.
  void fill_centered(std::span<double> out) const noexcept;

  /// i-th standard normal (Box-Muller on two uniforms).
  double normal(std::uint32_t index) const noexcept;

 private:
  Key key_;
  std::uint32_t step_lo_;
  std::uint32_t step_hi_;
  std::uint32_t domain_;
};

}  // namespace noisygap::rng
