#pragma once

// Dense complex linear algebra shared by every other module: matrices, the
// overflow-safe running product, sorted eigen/singular decompositions,
// permanents and matrix-free Kronecker actions.

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>
#include <vector>

namespace noisygap {

using cd = std::complex<double>;
using ComplexVector = std::vector<cd>;

/// Row-major dense complex matrix with value semantics.
class ComplexMatrix {
 public:
  ComplexMatrix() = default;
  ComplexMatrix(std::size_t rows, std::size_t cols);
  ComplexMatrix(std::size_t rows, std::size_t cols, std::vector<cd> entries);
  ComplexMatrix(std::initializer_list<std::initializer_list<cd>> rows);

  static ComplexMatrix identity(std::size_t n);
  static ComplexMatrix diagonal(std::span<const cd> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool is_square() const noexcept { return rows_ == cols_; }

  cd& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const cd& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  cd* data() noexcept { return data_.data(); }
  const cd* data() const noexcept { return data_.data(); }
  std::span<cd> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const cd> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
  std::span<const cd> entries() const noexcept { return data_; }

  ComplexVector column(std::size_t j) const;

  ComplexMatrix adjoint() const;
  ComplexMatrix transpose() const;
  ComplexMatrix conjugate() const;

  cd trace() const;
  double frobenius_norm() const;
  bool all_finite() const;

  ComplexMatrix& operator+=(const ComplexMatrix& other);
  ComplexMatrix& operator-=(const ComplexMatrix& other);
  ComplexMatrix& operator*=(cd s);

  friend bool operator==(const ComplexMatrix&, const ComplexMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<cd> data_;
};

ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b);
ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b);
ComplexMatrix operator*(cd s, ComplexMatrix a);
ComplexVector operator*(const ComplexMatrix& a, std::span<const cd> v);

/// Dense Kronecker product; used for small operators and as a test oracle.
ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);

double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b);
double norm2(std::span<const cd> v);
cd dot(std::span<const cd> x, std::span<const cd> y);  // sum conj(x) y

/// V = exp(log_scale) * core, with the largest column 2-norm of core equal to 1.
///
/// Ratios of eigenvalues and singular values are invariant under the scalar,
/// so long products can be accumulated without overflow or underflow.
class ScaledProduct {
 public:
  static ScaledProduct identity(std::size_t n);
  explicit ScaledProduct(ComplexMatrix m, double log_scale = 0.0);

  const ComplexMatrix& core() const noexcept { return core_; }
  double log_scale() const noexcept { return log_scale_; }
  std::size_t dim() const noexcept { return core_.rows(); }

  /// Applies f to the core in place and renormalizes afterwards.
  template <class F>
  void transform(F&& f) {
    f(core_);
    renormalize();
  }

  /// exp(log_scale) * core; overflows for long products, intended for tests.
  ComplexMatrix materialize() const;

 private:
  void renormalize();

  ComplexMatrix core_;
  double log_scale_ = 0.0;
};

/// Represents q * (product held by acc).
ScaledProduct scaled_multiply(const ScaledProduct& acc, const ComplexMatrix& q);

/// Largest column 2-norm.
double max_column_norm(const ComplexMatrix& m);

struct SpectralSnapshot {
  std::vector<cd> eigenvalues;  // descending modulus
  ComplexMatrix right_modes;    // column i is the unit-norm right mode of eigenvalue i
  std::optional<ComplexMatrix> left_modes;  // row i is the adjoint of left mode i
  std::size_t t = 0;
  double biorthogonality_residual = 0.0;
  bool near_defective = false;
};

struct SingularSnapshot {
  std::vector<double> singular_values;  // descending
  std::size_t t = 0;
};

enum class DefectivePolicy { kThrow, kFlag };

/// Residual above which left/right modes count as not bi-orthonormal.
inline constexpr double kNearDefectiveThreshold = 1e-6;

/// Eigendecomposition ordered by descending modulus. Ties are broken by
/// descending real part, then descending imaginary part, then original index.
SpectralSnapshot eig_sorted(const ComplexMatrix& m, bool with_left,
                            DefectivePolicy policy = DefectivePolicy::kThrow,
                            std::size_t t = 0);

SingularSnapshot svd_sorted(const ComplexMatrix& m, std::size_t t = 0);

inline constexpr std::size_t kMaxPermanentOrder = 20;

/// Ryser's formula with Gray-code subset order, O(2^n n).
cd permanent(const ComplexMatrix& m);

/// (a kron b) v for v of length X^2, via two X x X products.
ComplexVector apply_kron2(const ComplexMatrix& a, const ComplexMatrix& b, std::span<const cd> v);

/// Index (i, j) -> (j, i) on a vector of length X^2.
ComplexVector apply_swap2(std::span<const cd> v);

/// Integer square root of a perfect square; throws DimensionError otherwise.
std::size_t exact_sqrt(std::size_t n);

}  // namespace noisygap
