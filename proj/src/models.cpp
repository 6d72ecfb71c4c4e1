#include "noisygap/models.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "noisygap/error.hpp"
#include "noisygap/rng.hpp"

namespace noisygap {
namespace {

constexpr double kPi = std::numbers::pi;

// Sites of the cell layers. Cell k of the first layer is (2k, 2k+1); cell k of
// the shifted layer is (2k+1, 2k+2 mod X).
std::pair<std::size_t, std::size_t> zeta_cell(std::size_t k) { return {2 * k, 2 * k + 1}; }

std::pair<std::size_t, std::size_t> eta_cell(std::size_t size, std::size_t k) {
  return {2 * k + 1, (2 * k + 2) % size};
}

PairLayer rotation_layer(std::size_t size, bool shifted, double a1, double a2, double a3) {
  PairLayer layer;
  const auto blk = rotation_block(a1, a2, a3);
  for (std::size_t k = 0; k < size / 2; ++k) {
    const auto [p, q] = shifted ? eta_cell(size, k) : zeta_cell(k);
    layer.push_back({p, q, blk});
  }
  return layer;
}

void apply_pairs(const PairLayer& layer, ComplexMatrix& m) {
  const auto& k = kernels::active();
  for (const auto& pb : layer) k.pair_combine(m.row(pb.first).data(), m.row(pb.second).data(), m.cols(), pb.block);
}

void apply_pairs(const PairLayer& layer, std::span<cd> v) {
  for (const auto& pb : layer) {
    const cd a = v[pb.first], b = v[pb.second];
    v[pb.first] = pb.block.m[0] * a + pb.block.m[1] * b;
    v[pb.second] = pb.block.m[2] * a + pb.block.m[3] * b;
  }
}

kernels::Block2 hyperbolic_block(double bz) {
  const double c = std::cosh(bz), s = std::sinh(bz);
  return {{cd(c), cd(s), cd(s), cd(c)}};
}

}  // namespace

std::string_view model_kind_name(ModelKind kind) {
  return kind == ModelKind::kBrickworkLoss ? "BrickworkLoss" : "DiagonalLoss";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "BrickworkLoss") return ModelKind::kBrickworkLoss;
  if (name == "DiagonalLoss") return ModelKind::kDiagonalLoss;
  throw ConfigError("kind", "expected \"BrickworkLoss\" or \"DiagonalLoss\", got \"" + std::string(name) + "\"");
}

std::vector<double> default_angles(ModelKind kind) {
  if (kind == ModelKind::kBrickworkLoss) return {0.37 * kPi, 0.19 * kPi, 0.25 * kPi};
  return {0.33 * kPi, 0.41 * kPi, 0.25 * kPi, 0.22 * kPi, 0.13 * kPi, 0.25 * kPi};
}

ModelSpec ModelSpec::brickwork(std::size_t size, double beta, std::uint64_t seed) {
  return {ModelKind::kBrickworkLoss, size, beta, default_angles(ModelKind::kBrickworkLoss), seed};
}

ModelSpec ModelSpec::diagonal(std::size_t size, double beta, std::uint64_t seed) {
  return {ModelKind::kDiagonalLoss, size, beta, default_angles(ModelKind::kDiagonalLoss), seed};
}

void ModelSpec::validate() const {
  if (size < 4 || size % 2 != 0)
    throw ConfigError("X", "must be an even integer >= 4, got " + std::to_string(size));
  if (!std::isfinite(beta) || beta < 0.0)
    throw ConfigError("beta", "must be a finite non-negative number, got " + std::to_string(beta));
  const std::size_t want = kind == ModelKind::kBrickworkLoss ? 3 : 6;
  if (angles.size() != want)
    throw ConfigError("angles", std::string(model_kind_name(kind)) + " takes " + std::to_string(want) +
                                    " angles, got " + std::to_string(angles.size()));
  for (double a : angles)
    if (!std::isfinite(a)) throw ConfigError("angles", "angles must be finite");
}

std::size_t ModelSpec::noise_count() const {
  return kind == ModelKind::kBrickworkLoss ? size / 2 : size;
}

kernels::Block2 rotation_block(double a1, double a2, double a3) {
  const double c = std::cos(a3), s = std::sin(a3);
  return {{std::polar(c, a1), -std::polar(s, a2), std::polar(s, -a2), std::polar(c, -a1)}};
}

NoisyModel::NoisyModel(ModelSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  const std::size_t n = spec_.size;
  const auto& a = spec_.angles;
  if (spec_.kind == ModelKind::kBrickworkLoss) {
    layers_.push_back(rotation_layer(n, false, a[0], a[1], a[2]));
  } else {
    layers_.push_back(rotation_layer(n, false, a[0], a[1], a[2]));
    layers_.push_back(rotation_layer(n, true, a[3], a[4], a[5]));
  }
  unitary_ = ComplexMatrix::identity(n);
  for (const auto& layer : layers_) apply_pairs(layer, unitary_);

  noise_.cell.resize(n);
  noise_.sign.resize(n);
  if (spec_.kind == ModelKind::kBrickworkLoss) {
    const double h = 1.0 / std::sqrt(2.0);
    for (std::size_t k = 0; k < n / 2; ++k) {
      const auto [p, q] = eta_cell(n, k);
      noise_.cell[p] = k;
      noise_.cell[q] = k;
      noise_.sign[p] = +1;
      noise_.sign[q] = -1;
      noise_.basis.push_back({p, q, {{cd(h), cd(h), cd(h), cd(-h)}}});
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      noise_.cell[i] = i;
      noise_.sign[i] = +1;
    }
  }
}

void NoisyModel::fill_noise(std::size_t t, std::span<double> z) const {
  if (z.size() != spec_.noise_count()) throw DimensionError("fill_noise: wrong number of noise variables");
  rng::Stream(spec_.seed, rng::Domain::kNoise, t).fill_centered(z);
}

NoiseSample NoisyModel::sample_noise(std::size_t t) const {
  NoiseSample s{t, std::vector<double>(spec_.noise_count())};
  fill_noise(t, s.z);
  return s;
}

ComplexMatrix NoisyModel::noise_matrix(const NoiseSample& sample) const {
  if (sample.z.size() != spec_.noise_count()) throw DimensionError("noise_matrix: wrong number of noise variables");
  const std::size_t n = spec_.size;
  ComplexMatrix g(n, n);
  const double beta = spec_.beta;
  if (spec_.kind == ModelKind::kBrickworkLoss) {
    for (std::size_t k = 0; k < n / 2; ++k) {
      const auto [p, q] = eta_cell(n, k);
      const double bz = beta * sample.z[k];
      g(p, p) = g(q, q) = std::cosh(bz);
      g(p, q) = g(q, p) = std::sinh(bz);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) g(i, i) = std::exp(beta * sample.z[i]);
  }
  return g;
}

ComplexMatrix NoisyModel::step_matrix(std::size_t t) const {
  return noise_matrix(sample_noise(t)) * unitary_;
}

PerturbationParts NoisyModel::perturbation_parts(const NoiseSample& sample) const {
  if (sample.z.size() != spec_.noise_count())
    throw DimensionError("perturbation_parts: wrong number of noise variables");
  const std::size_t n = spec_.size;
  ComplexMatrix z(n, n);
  if (spec_.kind == ModelKind::kBrickworkLoss) {
    for (std::size_t k = 0; k < n / 2; ++k) {
      const auto [p, q] = eta_cell(n, k);
      z(p, q) = z(q, p) = sample.z[k];
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) z(i, i) = sample.z[i];
  }
  PerturbationParts parts;
  parts.a = unitary_;
  parts.b = z * unitary_;
  parts.c = cd(0.5) * (z * parts.b);
  return parts;
}

void NoisyModel::apply_step(std::span<const double> z, ComplexMatrix& m) const {
  if (m.rows() != spec_.size) throw DimensionError("apply_step: matrix has wrong row count");
  if (z.size() != spec_.noise_count()) throw DimensionError("apply_step: wrong number of noise variables");
  for (const auto& layer : layers_) apply_pairs(layer, m);
  const double beta = spec_.beta;
  if (beta == 0.0) return;
  const auto& k = kernels::active();
  if (spec_.kind == ModelKind::kBrickworkLoss) {
    for (std::size_t c = 0; c < z.size(); ++c) {
      const auto [p, q] = eta_cell(spec_.size, c);
      k.pair_combine(m.row(p).data(), m.row(q).data(), m.cols(), hyperbolic_block(beta * z[c]));
    }
  } else {
    for (std::size_t i = 0; i < z.size(); ++i) k.scale(m.row(i).data(), m.cols(), std::exp(beta * z[i]));
  }
}

void NoisyModel::apply_step(std::span<const double> z, std::span<cd> v) const {
  if (v.size() != spec_.size) throw DimensionError("apply_step: vector has wrong length");
  if (z.size() != spec_.noise_count()) throw DimensionError("apply_step: wrong number of noise variables");
  for (const auto& layer : layers_) apply_pairs(layer, v);
  const double beta = spec_.beta;
  if (beta == 0.0) return;
  if (spec_.kind == ModelKind::kBrickworkLoss) {
    for (std::size_t c = 0; c < z.size(); ++c) {
      const auto [p, q] = eta_cell(spec_.size, c);
      const double ch = std::cosh(beta * z[c]), sh = std::sinh(beta * z[c]);
      const cd a = v[p], b = v[q];
      v[p] = ch * a + sh * b;
      v[q] = sh * a + ch * b;
    }
  } else {
    for (std::size_t i = 0; i < z.size(); ++i) v[i] *= std::exp(beta * z[i]);
  }
}

void NoisyModel::apply_step(std::size_t t, ComplexMatrix& m) const {
  std::vector<double> z(spec_.noise_count());
  fill_noise(t, z);
  apply_step(std::span<const double>(z), m);
}

void NoisyModel::apply_step(std::size_t t, std::span<cd> v) const {
  std::vector<double> z(spec_.noise_count());
  fill_noise(t, z);
  apply_step(std::span<const double>(z), v);
}

void NoisyModel::apply_step(std::size_t t, ScaledProduct& p) const {
  std::vector<double> z(spec_.noise_count());
  fill_noise(t, z);
  p.transform([&](ComplexMatrix& core) { apply_step(std::span<const double>(z), core); });
}

ComplexMatrix build_unitary(const ModelSpec& spec) { return NoisyModel(spec).unitary(); }

std::pair<ComplexMatrix, NoiseSample> sample_noise_layer(const ModelSpec& spec, std::size_t t) {
  const NoisyModel model(spec);
  auto sample = model.sample_noise(t);
  auto g = model.noise_matrix(sample);
  return {std::move(g), std::move(sample)};
}

ComplexMatrix step_matrix(const ModelSpec& spec, std::size_t t) { return NoisyModel(spec).step_matrix(t); }

PerturbationParts perturbation_parts(const ModelSpec& spec, const NoiseSample& sample) {
  return NoisyModel(spec).perturbation_parts(sample);
}

long site_coordinate(std::size_t size, std::size_t index) {
  return static_cast<long>(index) - static_cast<long>(size / 2) + 1;
}

std::size_t site_index(std::size_t size, long coordinate) {
  const long half = static_cast<long>(size / 2);
  if (coordinate < -half + 1 || coordinate > half)
    throw DomainError("site coordinate " + std::to_string(coordinate) + " outside [" +
                      std::to_string(-half + 1) + ", " + std::to_string(half) + "]");
  return static_cast<std::size_t>(coordinate + half - 1);
}

}  // namespace noisygap
