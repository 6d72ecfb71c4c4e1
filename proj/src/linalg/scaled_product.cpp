#include <cmath>
#include <string>
#include <vector>

#include "noisygap/error.hpp"
#include "noisygap/kernels.hpp"
#include "noisygap/linalg.hpp"

namespace noisygap {

double max_column_norm(const ComplexMatrix& m) {
  const auto& k = kernels::active();
  std::vector<double> acc(m.cols(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) k.accumulate_abs2(m.row(i).data(), acc.data(), m.cols());
  double best = 0.0;
  for (double a : acc) best = std::max(best, a);
  return std::sqrt(best);
}

ScaledProduct ScaledProduct::identity(std::size_t n) {
  return ScaledProduct(ComplexMatrix::identity(n));
}

ScaledProduct::ScaledProduct(ComplexMatrix m, double log_scale)
    : core_(std::move(m)), log_scale_(log_scale) {
  if (!core_.is_square()) throw DimensionError("ScaledProduct: core must be square");
  renormalize();
}

void ScaledProduct::renormalize() {
  const double norm = max_column_norm(core_);
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw NumericalError("ScaledProduct: cannot renormalize, max column norm = " +
                         std::to_string(norm));
  }
  kernels::active().scale(core_.data(), core_.size(), 1.0 / norm);
  log_scale_ += std::log(norm);
}

ComplexMatrix ScaledProduct::materialize() const {
  return cd{std::exp(log_scale_), 0.0} * core_;
}

ScaledProduct scaled_multiply(const ScaledProduct& acc, const ComplexMatrix& q) {
  if (!q.is_square() || q.rows() != acc.dim()) {
    throw DimensionError("scaled_multiply: step is " + std::to_string(q.rows()) + "x" +
                         std::to_string(q.cols()) + ", product is " + std::to_string(acc.dim()) +
                         "x" + std::to_string(acc.dim()));
  }
  if (!q.all_finite()) throw NumericalError("scaled_multiply: non-finite step matrix");
  return ScaledProduct(q * acc.core(), acc.log_scale());
}

}  // namespace noisygap
