#pragma once

// The two noisy loss models. One step is Q_t = G_t U: a fixed unitary layer
// followed by a random non-unitary noise layer whose variables are uniform on
// [-1/2, 1/2) and are regenerated from (seed, t) alone.
//
// Site index i corresponds to the coordinate x = i - X/2 + 1. Cells of the
// first brickwork layer pair sites (2k, 2k+1); cells of the shifted layer pair
// (2k+1, 2k+2 mod X).

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "noisygap/kernels.hpp"
#include "noisygap/linalg.hpp"

namespace noisygap {

enum class ModelKind { kBrickworkLoss, kDiagonalLoss };

std::string_view model_kind_name(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);  // throws ConfigError

std::vector<double> default_angles(ModelKind kind);

struct ModelSpec {
  ModelKind kind = ModelKind::kBrickworkLoss;
  std::size_t size = 20;
  double beta = 0.3;
  std::vector<double> angles = default_angles(ModelKind::kBrickworkLoss);
  std::uint64_t seed = 1;

  static ModelSpec brickwork(std::size_t size, double beta, std::uint64_t seed = 1);
  static ModelSpec diagonal(std::size_t size, double beta, std::uint64_t seed = 1);

  /// Throws ConfigError naming the offending field.
  void validate() const;

  /// Number of noise variables per step: X/2 (brickwork) or X (diagonal).
  std::size_t noise_count() const;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

struct NoiseSample {
  std::size_t t = 0;
  std::vector<double> z;
};

/// Q = A + beta B + beta^2 C + O(beta^3).
struct PerturbationParts {
  ComplexMatrix a;
  ComplexMatrix b;
  ComplexMatrix c;
};

/// A set of disjoint 2x2 actions on site pairs.
struct PairBlock {
  std::size_t first;
  std::size_t second;
  kernels::Block2 block;
};
using PairLayer = std::vector<PairBlock>;

/// Noise layers share one structure: G = H diag(exp(beta sign_i z_cell(i))) H
/// with H an orthogonal involution (Hadamard on each shifted cell for the
/// brickwork model, identity for the diagonal model).
struct NoiseStructure {
  std::vector<std::size_t> cell;  // noise variable driving site i in the eigenbasis
  std::vector<int> sign;          // +1 or -1
  PairLayer basis;                // H as pair blocks; empty means identity
};

/// 2x2 block with the angle convention of both models:
/// [[e^{i a1} cos a3, -e^{i a2} sin a3], [e^{-i a2} sin a3, e^{-i a1} cos a3]].
kernels::Block2 rotation_block(double a1, double a2, double a3);

class NoisyModel {
 public:
  explicit NoisyModel(ModelSpec spec);

  const ModelSpec& spec() const noexcept { return spec_; }
  std::size_t size() const noexcept { return spec_.size; }

  const ComplexMatrix& unitary() const noexcept { return unitary_; }
  /// Pair layers whose ordered product (first applied first) is U.
  std::span<const PairLayer> unitary_layers() const noexcept { return layers_; }
  const NoiseStructure& noise_structure() const noexcept { return noise_; }

  NoiseSample sample_noise(std::size_t t) const;
  /// Fills z for step t without allocating; z.size() must equal noise_count().
  void fill_noise(std::size_t t, std::span<double> z) const;

  ComplexMatrix noise_matrix(const NoiseSample& sample) const;
  ComplexMatrix step_matrix(std::size_t t) const;
  PerturbationParts perturbation_parts(const NoiseSample& sample) const;

  /// m <- Q_t m using the layer structure, O(X) work per column.
  void apply_step(std::size_t t, ComplexMatrix& m) const;
  void apply_step(std::size_t t, std::span<cd> v) const;
  void apply_step(std::size_t t, ScaledProduct& p) const;

  /// Same actions with caller-supplied noise values.
  void apply_step(std::span<const double> z, ComplexMatrix& m) const;
  void apply_step(std::span<const double> z, std::span<cd> v) const;

 private:
  ModelSpec spec_;
  std::vector<PairLayer> layers_;
  ComplexMatrix unitary_;
  NoiseStructure noise_;
};

// Free-function forms of the model interface.
ComplexMatrix build_unitary(const ModelSpec& spec);
std::pair<ComplexMatrix, NoiseSample> sample_noise_layer(const ModelSpec& spec, std::size_t t);
ComplexMatrix step_matrix(const ModelSpec& spec, std::size_t t);
PerturbationParts perturbation_parts(const ModelSpec& spec, const NoiseSample& sample);

/// x = i - X/2 + 1 and its inverse.
long site_coordinate(std::size_t size, std::size_t index);
std::size_t site_index(std::size_t size, long coordinate);  // throws DomainError

}  // namespace noisygap
