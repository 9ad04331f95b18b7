#pragma once

#include <random>

#include "opsyslab/hermitian.hpp"

namespace testing_support {

using opsyslab::cplx;
using opsyslab::Hermitian;
using opsyslab::Index;
using opsyslab::MatrixXc;

inline MatrixXc gaussian_matrix(std::mt19937_64& rng, Index rows, Index cols) {
  std::normal_distribution<double> g;
  MatrixXc m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = cplx(g(rng), g(rng));
  return m;
}

inline Hermitian random_hermitian(std::mt19937_64& rng, Index n) {
  const MatrixXc g = gaussian_matrix(rng, n, n);
  return Hermitian(MatrixXc((g + g.adjoint()) / 2.0));
}

inline MatrixXc random_unitary(std::mt19937_64& rng, Index n) {
  Eigen::HouseholderQR<MatrixXc> qr(gaussian_matrix(rng, n, n));
  return qr.householderQ() * MatrixXc::Identity(n, n);
}

// Full-rank density: G G* / tr.
inline Hermitian random_density(std::mt19937_64& rng, Index n, Index rank = -1) {
  if (rank < 0) rank = n;
  const MatrixXc g = gaussian_matrix(rng, n, rank);
  MatrixXc x = g * g.adjoint();
  x /= std::real(x.trace());
  return Hermitian(x);
}

inline Hermitian from_real(std::initializer_list<std::initializer_list<double>> rows) {
  const Index n = Index(rows.size());
  MatrixXc m(n, n);
  Index i = 0;
  for (const auto& r : rows) {
    Index j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return Hermitian(m);
}

inline Hermitian unit_sym(Index n, Index i, Index j) {
  MatrixXc m = MatrixXc::Zero(n, n);
  m(i, j) = 1.0;
  m(j, i) = 1.0;
  return Hermitian(m);
}

inline double max_entry_diff(const MatrixXc& a, const MatrixXc& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace testing_support

#include "opsyslab/star_algebra.hpp"

namespace testing_support {

// Embeds a k×k matrix at the top-left of an n×n zero matrix.
inline Hermitian embed(const Hermitian& h, opsyslab::Index n) {
  MatrixXc m = MatrixXc::Zero(n, n);
  m.topLeftCorner(h.dim(), h.dim()) = h.matrix();
  return Hermitian(m);
}

// M_k ⊕ C ⊕ ... ⊕ C inside M_n (n − k scalar summands).
inline opsyslab::MatrixStarAlgebra block_algebra(opsyslab::Index k, opsyslab::Index n) {
  std::vector<Hermitian> basis;
  for (const auto& b : opsyslab::canonical_hermitian_basis(k)) basis.push_back(embed(b, n));
  for (opsyslab::Index i = k; i < n; ++i) {
    MatrixXc e = MatrixXc::Zero(n, n);
    e(i, i) = 1.0;
    basis.push_back(Hermitian(e));
  }
  return opsyslab::algebra_from_orthonormal(std::move(basis));
}

inline Hermitian sigma_y(opsyslab::Index n = 2) {
  MatrixXc m = MatrixXc::Zero(n, n);
  m(0, 1) = cplx(0, -1);
  m(1, 0) = cplx(0, 1);
  return Hermitian(m);
}

}  // namespace testing_support
