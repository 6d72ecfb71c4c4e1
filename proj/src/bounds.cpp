#include "noisygap/bounds.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "noisygap/error.hpp"

namespace noisygap {
namespace {

std::size_t ipow(std::size_t base, std::size_t e) {
  std::size_t r = 1;
  while (e--) r *= base;
  return r;
}

kernels::Block2 conj_block(const kernels::Block2& b) {
  return {{std::conj(b.m[0]), std::conj(b.m[1]), std::conj(b.m[2]), std::conj(b.m[3])}};
}

// Averaged noise diagonal in the eigenbasis: for each tensor index the legs
// are grouped by cell and every touched cell contributes g(beta |sum of signs|).
std::vector<double> averaged_noise_table(const NoiseStructure& noise, std::size_t x, std::size_t order, double beta) {
  // g(k beta) for k = 0..order.
  std::vector<double> gk(order + 1);
  for (std::size_t k = 0; k <= order; ++k) gk[k] = g_factor(static_cast<double>(k) * beta);

  std::vector<double> table(ipow(x, order));
  std::vector<std::size_t> idx(order, 0);
  std::size_t cells[4];
  int sums[4];
  for (std::size_t flat = 0; flat < table.size(); ++flat) {
    std::size_t r = flat;
    for (std::size_t a = order; a-- > 0;) {
      idx[a] = r % x;
      r /= x;
    }
    std::size_t distinct = 0;
    for (std::size_t a = 0; a < order; ++a) {
      const std::size_t c = noise.cell[idx[a]];
      const int s = noise.sign[idx[a]];
      std::size_t k = 0;
      while (k < distinct && cells[k] != c) ++k;
      if (k == distinct) {
        cells[distinct] = c;
        sums[distinct++] = s;
      } else {
        sums[k] += s;
      }
    }
    double v = 1.0;
    for (std::size_t k = 0; k < distinct; ++k) v *= gk[static_cast<std::size_t>(std::abs(sums[k]))];
    table[flat] = v;
  }
  return table;
}

}  // namespace

double g_factor(double beta) {
  if (beta < 0.0 || !std::isfinite(beta)) throw DomainError("g_factor: beta must be finite and >= 0");
  const double h = 0.5 * beta;
  if (h < 1e-4) {
    const double h2 = h * h;
    return 1.0 + h2 / 6.0 + h2 * h2 / 120.0;
  }
  return std::sinh(h) / h;
}

ExtendedOperator::ExtendedOperator(const NoisyModel& model, std::size_t order)
    : size_(model.size()), order_(order) {
  if (order != 2 && order != 4) throw DomainError("ExtendedOperator: order must be 2 or 4");
  for (const auto& layer : model.unitary_layers()) unitary_layers_.push_back(layer);
  basis_ = model.noise_structure().basis;
  table_ = averaged_noise_table(model.noise_structure(), size_, order, model.spec().beta);
}

void ExtendedOperator::apply_axis(std::span<cd> v, std::size_t axis, const PairLayer& layer, bool conjugate) const {
  const auto& k = kernels::active();
  const std::size_t stride = ipow(size_, order_ - 1 - axis);
  const std::size_t outer = ipow(size_, axis);
  const std::size_t span_len = stride * size_;
  std::vector<kernels::Block2> blocks;
  blocks.reserve(layer.size());
  for (const auto& pb : layer) blocks.push_back(conjugate ? conj_block(pb.block) : pb.block);
  // Outer slabs are contiguous; finishing one slab before the next keeps it in cache.
  for (std::size_t o = 0; o < outer; ++o) {
    cd* base = v.data() + o * span_len;
    for (std::size_t j = 0; j < layer.size(); ++j) {
      const auto& pb = layer[j];
      const auto& b = blocks[j];
      if (stride == 1) {
        const cd p = base[pb.first], q = base[pb.second];
        base[pb.first] = b.m[0] * p + b.m[1] * q;
        base[pb.second] = b.m[2] * p + b.m[3] * q;
      } else {
        k.pair_combine(base + pb.first * stride, base + pb.second * stride, stride, b);
      }
    }
  }
}

void ExtendedOperator::apply(std::span<const cd> in, std::span<cd> out) const {
  if (in.size() != dim() || out.size() != dim()) throw DimensionError("ExtendedOperator: vector length must be X^k");
  std::copy(in.begin(), in.end(), out.begin());
  // First half of the axes carry U, second half U*.
  for (std::size_t axis = 0; axis < order_; ++axis) {
    const bool conj = axis >= order_ / 2;
    for (const auto& layer : unitary_layers_) apply_axis(out, axis, layer, conj);
  }
  if (!basis_.empty())
    for (std::size_t axis = 0; axis < order_; ++axis) apply_axis(out, axis, basis_, false);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= table_[i];
  if (!basis_.empty())
    for (std::size_t axis = 0; axis < order_; ++axis) apply_axis(out, axis, basis_, false);
}

ComplexVector ExtendedOperator::apply(std::span<const cd> in) const {
  ComplexVector out(in.size());
  apply(in, out);
  return out;
}

ComplexMatrix ExtendedOperator::dense() const {
  const std::size_t n = dim();
  ComplexMatrix m(n, n);
  ComplexVector e(n, 0.0), col(n);
  for (std::size_t j = 0; j < n; ++j) {
    e[j] = 1.0;
    apply(e, col);
    e[j] = 0.0;
    for (std::size_t i = 0; i < n; ++i) m(i, j) = col[i];
  }
  return m;
}

TwoFoldOperator build_twofold(const ModelSpec& spec) {
  spec.validate();
  const NoisyModel model(spec);
  TwoFoldOperator op{ExtendedOperator(model, 2), std::nullopt};
  if (op.factored.dim() * op.factored.dim() <= kDenseTwofoldEntries) op.dense = op.factored.dense();
  return op;
}

void FourFoldOperator::project(std::span<const cd> in, std::span<cd> out) const {
  const std::size_t n = dim();
  if (in.size() != n || out.size() != n) throw DimensionError("FourFoldOperator: vector length must be X^4");
  if (in.data() == out.data()) throw DimensionError("FourFoldOperator::project: buffers must not alias");
  // (I - S_a)(I - S_b)/4 = (I - S_a - S_b + S_a S_b)/4.
  const std::size_t x = size(), x2 = x * x;
  for (std::size_t a1 = 0; a1 < x; ++a1)
    for (std::size_t a2 = 0; a2 < x; ++a2) {
      const cd* keep = in.data() + (a1 * x + a2) * x2;
      const cd* swapped = in.data() + (a2 * x + a1) * x2;
      cd* dst = out.data() + (a1 * x + a2) * x2;
      for (std::size_t b1 = 0; b1 < x; ++b1)
        for (std::size_t b2 = 0; b2 < x; ++b2) {
          const std::size_t d = b1 * x + b2, e = b2 * x + b1;
          dst[d] = 0.25 * ((keep[d] - keep[e]) - (swapped[d] - swapped[e]));
        }
    }
}

void FourFoldOperator::apply_projected(std::span<const cd> in, std::span<cd> out) const {
  ComplexVector tmp(dim());
  project(in, tmp);
  q_.apply(tmp, out);
}

EigenEstimate power_iteration(const std::function<void(std::span<const cd>, std::span<cd>)>& apply,
                              ComplexVector start, const PowerIterationOptions& options) {
  double n0 = norm2(start);
  if (!(n0 > 0.0) || !std::isfinite(n0)) throw DomainError("power_iteration: start vector must be nonzero");
  ComplexVector x = std::move(start), y(x.size());
  for (auto& v : x) v /= n0;
  cd previous = std::numeric_limits<double>::quiet_NaN();
  double residual = std::numeric_limits<double>::infinity();
  for (std::size_t it = 1; it <= options.max_iterations; ++it) {
    apply(x, y);
    const cd theta = dot(x, y);  // x is unit
    double r2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) r2 += std::norm(y[i] - theta * x[i]);
    residual = std::sqrt(r2);
    const double ny = norm2(y);
    if (!(ny > 0.0) || !std::isfinite(ny)) throw NumericalError("power_iteration: iterate vanished or overflowed");
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = y[i] / ny;
    const double scale = std::max(1.0, std::abs(theta));
    if (std::abs(theta - previous) <= options.tolerance * scale && residual <= options.residual_tolerance * scale)
      return {theta, it, residual};
    previous = theta;
  }
  throw NumericalError("power_iteration: no convergence after " + std::to_string(options.max_iterations) +
                       " iterations (residual " + std::to_string(residual) + ")");
}

double mu_power(const ExtendedOperator& op, const PowerIterationOptions& options) {
  if (op.order() != 2) throw DomainError("mu_power: needs the two-fold operator");
  const std::size_t x = op.size();
  ComplexVector start(x * x, 0.0);
  for (std::size_t i = 0; i < x; ++i) start[i * x + i] = 1.0;
  const auto est = power_iteration([&](std::span<const cd> in, std::span<cd> out) { op.apply(in, out); },
                                   std::move(start), options);
  return std::abs(est.value);
}

double mu_of(const TwoFoldOperator& op, const PowerIterationOptions& options) {
  if (op.dense) return std::abs(eig_sorted(*op.dense, false).eigenvalues.front());
  return mu_power(op.factored, options);
}

double nu_power(const FourFoldOperator& op, const PowerIterationOptions& options) {
  const std::size_t x = op.size(), x2 = x * x;
  ComplexVector pairing(op.dim(), 0.0), start(op.dim());
  for (std::size_t a1 = 0; a1 < x; ++a1)
    for (std::size_t a2 = 0; a2 < x; ++a2) pairing[(a1 * x + a2) * x2 + a1 * x + a2] = 1.0;
  op.project(pairing, start);
  const auto est = power_iteration(
      [&](std::span<const cd> in, std::span<cd> out) { op.apply_projected(in, out); }, std::move(start), options);
  return std::abs(est.value);
}

double nu_of(const ModelSpec& spec, const PowerIterationOptions& options) {
  spec.validate();
  return nu_power(FourFoldOperator(NoisyModel(spec)), options);
}

double cs_bound_rate(double mu, double nu) {
  if (!(mu > 0.0) || !(nu > 0.0)) throw DomainError("cs_bound_rate: mu and nu must be positive");
  return 0.5 * std::log(nu) - std::log(mu);
}

double tau_omega_eig(double mu, double nu, double c) {
  if (!(c > 0.0 && c < 1.0)) throw DomainError("tau_omega_eig: c must lie in (0, 1)");
  const double rate = cs_bound_rate(mu, nu);
  if (std::abs(rate) < kRateZeroTolerance) return std::numeric_limits<double>::infinity();
  return std::abs(std::log(c) / rate);
}

double perturbative_trace(const ModelSpec& spec) {
  spec.validate();
  const NoisyModel model(spec);
  const std::size_t cells = spec.noise_count();
  double trace = 0.0;
  // B is linear in z and avg(z_a z_b) = delta_ab / 12, so the average is a sum
  // over unit noise on one cell at a time.
  for (std::size_t c = 0; c < cells; ++c) {
    NoiseSample unit{0, std::vector<double>(cells, 0.0)};
    unit.z[c] = 1.0;
    const auto parts = model.perturbation_parts(unit);
    const ComplexMatrix ad = parts.a.adjoint(), bd = parts.b.adjoint();
    const ComplexMatrix ab = ad * parts.b, ba = bd * parts.a;
    const cd term = 2.0 * (bd * parts.b).trace() + (ab * ab).trace() + (ba * ba).trace();
    trace += term.real() / 12.0;
  }
  return trace;
}

double perturbative_slope(const ModelSpec& spec) {
  const double x = static_cast<double>(spec.size);
  return -perturbative_trace(spec) * spec.beta * spec.beta / (x * x);
}

double tau_omega_sv(double slope, double c) {
  if (!(c > 0.0 && c < 1.0)) throw DomainError("tau_omega_sv: c must lie in (0, 1)");
  if (slope > 0.0) throw DomainError("tau_omega_sv: slope must be <= 0");
  if (slope == 0.0) return std::numeric_limits<double>::infinity();
  return 2.0 * std::abs(std::log(c) + 0.5 * std::log(2.0)) / std::abs(slope);
}

PerturbationPrediction predict(const ModelSpec& spec, double c, bool with_bound) {
  PerturbationPrediction p;
  p.trace = perturbative_trace(spec);
  const double x = static_cast<double>(spec.size);
  p.slope = -p.trace * spec.beta * spec.beta / (x * x);
  p.tau_omega_sv = tau_omega_sv(p.slope, c);
  if (with_bound) p.tau_omega_eig = tau_omega_eig(mu_of(build_twofold(spec)), nu_of(spec), c);
  return p;
}

}  // namespace noisygap
