#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "noisygap/error.hpp"
#include "noisygap/linalg.hpp"

namespace noisygap {
namespace {

using RowMajorXcd = Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const RowMajorXcd> as_eigen(const ComplexMatrix& m) {
  return {m.data(), static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols())};
}

bool before(const cd& a, std::size_t ia, const cd& b, std::size_t ib) {
  const double ma = std::abs(a), mb = std::abs(b);
  if (ma != mb) return ma > mb;
  if (a.real() != b.real()) return a.real() > b.real();
  if (a.imag() != b.imag()) return a.imag() > b.imag();
  return ia < ib;
}

}  // namespace

SpectralSnapshot eig_sorted(const ComplexMatrix& m, bool with_left, DefectivePolicy policy,
                            std::size_t t) {
  if (!m.is_square()) throw DimensionError("eig_sorted: matrix must be square");
  if (!m.all_finite()) throw NumericalError("eig_sorted: non-finite input");
  const std::size_t n = m.rows();

  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(Eigen::MatrixXcd(as_eigen(m)), true);
  if (solver.info() != Eigen::Success) throw NumericalError("eig_sorted: eigensolver did not converge");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto& values = solver.eigenvalues();
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return before(values(static_cast<Eigen::Index>(a)), a, values(static_cast<Eigen::Index>(b)), b);
  });

  SpectralSnapshot snap;
  snap.t = t;
  snap.eigenvalues.resize(n);
  snap.right_modes = ComplexMatrix(n, n);
  Eigen::MatrixXcd right(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto src = static_cast<Eigen::Index>(order[k]);
    snap.eigenvalues[k] = values(src);
    Eigen::VectorXcd col = solver.eigenvectors().col(src);
    const double nrm = col.norm();
    if (nrm > 0.0) col /= nrm;
    right.col(static_cast<Eigen::Index>(k)) = col;
    for (std::size_t i = 0; i < n; ++i) snap.right_modes(i, k) = col(static_cast<Eigen::Index>(i));
  }

  if (with_left) {
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(right);
    const Eigen::MatrixXcd left = lu.inverse();
    const Eigen::MatrixXcd gram = left * right;
    const double residual =
        (gram - Eigen::MatrixXcd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)))
            .cwiseAbs()
            .maxCoeff();
    // L R = I holds to rounding even for nearly parallel modes, so the attainable
    // accuracy eps * cond(R) is folded in as well.
    const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXcd>(right).singularValues();
    const double smin = sv(sv.size() - 1);
    const double cond_bound =
        smin > 0.0 ? std::numeric_limits<double>::epsilon() * sv(0) / smin : INFINITY;
    const bool finite = left.allFinite();
    snap.biorthogonality_residual = finite ? std::max(residual, cond_bound) : INFINITY;
    snap.near_defective = !finite || snap.biorthogonality_residual > kNearDefectiveThreshold;
    if (snap.near_defective && policy == DefectivePolicy::kThrow) {
      throw NearDefectiveError("eig_sorted: near-defective matrix, bi-orthonormality residual " +
                                   std::to_string(snap.biorthogonality_residual),
                               snap.biorthogonality_residual);
    }
    ComplexMatrix rows(n, n);
    if (finite) {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          rows(i, j) = left(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    snap.left_modes = std::move(rows);
  }
  return snap;
}

SingularSnapshot svd_sorted(const ComplexMatrix& m, std::size_t t) {
  if (!m.all_finite()) throw NumericalError("svd_sorted: non-finite input");
  SingularSnapshot snap;
  snap.t = t;
  if (m.size() == 0) return snap;
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(Eigen::MatrixXcd(as_eigen(m)));
  const auto& s = svd.singularValues();
  snap.singular_values.assign(s.data(), s.data() + s.size());
  std::sort(snap.singular_values.begin(), snap.singular_values.end(), std::greater<>());
  return snap;
}

}  // namespace noisygap
