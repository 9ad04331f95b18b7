#pragma once

// Finite-dimensional *-algebras of n×n matrices: generation from a
// self-adjoint subspace, commutants, centers and GNS representations.

#include <Eigen/Dense>

#include <vector>

#include "opsyslab/hermitian.hpp"
#include "opsyslab/state.hpp"

namespace opsyslab {

inline constexpr double kRankTol = 1e-9;
inline constexpr Index kMaxAlgebraDim = 16;

/// A self-adjoint subspace of M_n given by a linearly independent hermitian
/// basis. Complex span of the basis = the subspace; real span = its hermitian
/// part.
class OperatorSubspace {
 public:
  OperatorSubspace() = default;
  /// Throws InputError on an empty, dependent or dimension-inconsistent basis.
  explicit OperatorSubspace(std::vector<Hermitian> basis);

  Index ambient_dim() const { return n_; }
  Index dim() const { return Index(basis_.size()); }
  const std::vector<Hermitian>& basis() const { return basis_; }
  /// Whether the identity lies in the span.
  bool unital() const { return unital_; }

  /// Least-squares real coordinates of h in the given basis.
  Eigen::VectorXd coordinates(const Hermitian& h) const;
  /// Distance (Frobenius) from h to the span.
  double residual(const Hermitian& h) const;
  bool contains(const Hermitian& h, double tol = 1e-9) const;
  /// Orthonormal (under Re tr) hermitian basis of the same span.
  const std::vector<Hermitian>& orthonormal_basis() const { return ortho_; }

 private:
  Index n_ = 0;
  std::vector<Hermitian> basis_;
  std::vector<Hermitian> ortho_;
  Eigen::MatrixXd hv_;     // hvec of the basis as columns
  Eigen::MatrixXd q_;      // orthonormal columns spanning hv_
  bool unital_ = false;
};

/// A *-subalgebra of M_n with an orthonormal hermitian basis (Re tr pairing).
class MatrixStarAlgebra {
 public:
  MatrixStarAlgebra() = default;

  Index ambient_dim() const { return n_; }
  Index dim() const { return Index(basis_.size()); }
  const std::vector<Hermitian>& basis() const { return basis_; }
  bool contains_identity() const { return unit_; }

  bool contains(const Hermitian& h, double tol = 1e-9) const;
  /// Complex coordinates α_k = tr(b_k Y) of a matrix Y ∈ A.
  Eigen::VectorXcd coordinates(const MatrixXc& y) const;
  /// Orthogonal projection (Re tr) of a hermitian matrix onto A.
  Hermitian project(const Hermitian& h) const;
  OperatorSubspace as_subspace() const { return OperatorSubspace(basis_); }

  /// Largest residual of products and adjoints of basis elements outside the span.
  double closure_residual() const;

  friend MatrixStarAlgebra generate_algebra(const OperatorSubspace& gen, bool add_identity);
  friend MatrixStarAlgebra full_matrix_algebra(Index n);
  friend MatrixStarAlgebra commutant(const MatrixStarAlgebra& a);
  friend MatrixStarAlgebra center(const MatrixStarAlgebra& a);
  friend MatrixStarAlgebra algebra_from_orthonormal(std::vector<Hermitian> basis);

 private:
  Index n_ = 0;
  std::vector<Hermitian> basis_;
  Eigen::MatrixXd q_;  // hvec of the basis as columns
  bool unit_ = false;
};

/// Smallest *-algebra containing the generators, and I when add_identity is
/// set (default: when the subspace is unital). Iterates pairwise products
/// until the dimension stabilizes.
MatrixStarAlgebra generate_algebra(const OperatorSubspace& gen, bool add_identity);
inline MatrixStarAlgebra generate_algebra(const OperatorSubspace& gen) {
  return generate_algebra(gen, gen.unital());
}
MatrixStarAlgebra full_matrix_algebra(Index n);
/// Diagonal matrices in M_n.
MatrixStarAlgebra diagonal_algebra(Index n);
/// Wraps an orthonormal hermitian basis of a known *-algebra (not re-closed).
MatrixStarAlgebra algebra_from_orthonormal(std::vector<Hermitian> basis);

/// {X : XB = BX for all B ∈ A}.
MatrixStarAlgebra commutant(const MatrixStarAlgebra& a);
/// A ∩ A'.
MatrixStarAlgebra center(const MatrixStarAlgebra& a);
/// Dimension of the commutant of a family of hermitian matrices.
Index commutant_dimension(const std::vector<Hermitian>& family);

/// GNS data of a state on a unital *-algebra. The GNS space is C^rep_dim with
/// the standard inner product.
struct GnsData {
  Index rep_dim = 0;
  std::vector<MatrixXc> rep;  // π(b_k) for each basis element of A
  Eigen::VectorXcd cyclic_vector;
  MatrixXc gram;              // [φ(b_j* b_i)]
  MatrixXc embedding;         // P: algebra coordinates -> GNS space

  /// π(y) for any y ∈ A.
  MatrixXc represent(const MatrixXc& y, const MatrixStarAlgebra& a) const;
};

GnsData gns(const StateFunctional& phi, const MatrixStarAlgebra& a);

}  // namespace opsyslab
