#include "noisygap/rng.hpp"

#include <cmath>
#include <numbers>

namespace noisygap::rng {
namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53;
constexpr std::uint32_t kMul1 = 0xCD9E8D57;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

}  // namespace

Counter philox4x32_10(Counter c, Key k) noexcept {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, c[0], hi0, lo0);
    mulhilo(kMul1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += kWeyl0;
    k[1] += kWeyl1;
  }
  return c;
}

Stream::Stream(std::uint64_t seed, Domain domain, std::uint64_t step) noexcept
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      step_lo_(static_cast<std::uint32_t>(step)),
      step_hi_(static_cast<std::uint32_t>(step >> 32)),
      domain_(static_cast<std::uint32_t>(domain)) {}

namespace {

inline double to_unit(std::uint32_t hi, std::uint32_t lo) noexcept {
  const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 21) ^ (lo >> 11);
  return static_cast<double>(bits) * 0x1.0p-53;
}

}  // namespace

double Stream::uniform(std::uint32_t index) const noexcept {
  const Counter out = philox4x32_10({step_lo_, step_hi_, index >> 1, domain_}, key_);
  return (index & 1U) ? to_unit(out[2], out[3]) : to_unit(out[0], out[1]);
}

void Stream::fill_centered(std::span<double> out) const noexcept {
  const std::size_t n = out.size();
  for (std::size_t i = 0; i < n; i += 2) {
    const Counter block =
        philox4x32_10({step_lo_, step_hi_, static_cast<std::uint32_t>(i >> 1), domain_}, key_);
    out[i] = to_unit(block[0], block[1]) - 0.5;
    if (i + 1 < n) out[i + 1] = to_unit(block[2], block[3]) - 0.5;
  }
}

double Stream::normal(std::uint32_t index) const noexcept {
  const double u1 = 1.0 - uniform(2 * index);  // (0, 1]
  const double u2 = uniform(2 * index + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace noisygap::rng
