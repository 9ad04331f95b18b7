#pragma once

#include "opsyslab/hermitian.hpp"

namespace opsyslab {

/// A state a ↦ tr(aX) carried by a density X ⪰ 0 with tr X = 1. When the
/// state lives on a proper subspace the density is any representative.
class StateFunctional {
 public:
  StateFunctional() = default;
  /// Throws InputError unless X ⪰ −1e-10 and |tr X − 1| ≤ 1e-10.
  explicit StateFunctional(Hermitian density) : x_(std::move(density)) {
    if (x_.empty()) throw InputError("state density is empty");
    const double tr = std::real(x_.matrix().trace());
    if (std::abs(tr - 1.0) > 1e-10)
      throw InputError("state density must have unit trace, got " + std::to_string(tr));
    if (lambda_min(x_) < -1e-10) throw InputError("state density is not positive semidefinite");
  }

  /// Vector state a ↦ ⟨aξ, ξ⟩ for a unit vector ξ.
  static StateFunctional vector_state(const Eigen::VectorXcd& xi) {
    if (std::abs(xi.norm() - 1.0) > 1e-10) throw InputError("vector state needs a unit vector");
    return StateFunctional(Hermitian(MatrixXc(xi * xi.adjoint())));
  }
  static StateFunctional normalized_trace(Index n) {
    return StateFunctional(Hermitian(MatrixXc(MatrixXc::Identity(n, n) / double(n))));
  }

  Index ambient_dim() const { return x_.dim(); }
  const Hermitian& density() const { return x_; }

  cplx operator()(const MatrixXc& a) const {
    if (a.rows() != x_.dim() || a.cols() != x_.dim())
      throw InputError("state evaluated on a matrix of the wrong size");
    return (a * x_.matrix()).trace();
  }
  double operator()(const Hermitian& a) const { return std::real((*this)(a.matrix())); }

 private:
  Hermitian x_;
};

}  // namespace opsyslab
