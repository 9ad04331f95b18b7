#include "doctest.h"
#include "support.hpp"

#include <Eigen/SVD>

#include "opsyslab/star_algebra.hpp"

using namespace opsyslab;
using namespace testing_support;

namespace {

OperatorSubspace s_offdiag() {
  return OperatorSubspace({Hermitian::identity(2), unit_sym(2, 0, 1),
                           Hermitian(MatrixXc(cplx(0, 1) * (matrix_unit(2, 0, 1) - matrix_unit(2, 1, 0))))});
}

// Commutant dimension from the complex Kronecker system (I⊗B − Bᵀ⊗I) vec X = 0.
Index kron_commutant_dim(const std::vector<Hermitian>& family) {
  const Index n = family.front().dim();
  MatrixXc sys(Index(family.size()) * n * n, n * n);
  const MatrixXc id = MatrixXc::Identity(n, n);
  for (std::size_t k = 0; k < family.size(); ++k) {
    const MatrixXc& b = family[k].matrix();
    MatrixXc blk(n * n, n * n);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j)
        blk.block(i * n, j * n, n, n) = id(i, j) * b - b.transpose()(i, j) * id;
    sys.block(Index(k) * n * n, 0, n * n, n * n) = blk;
  }
  Eigen::JacobiSVD<MatrixXc> svd(sys);
  const auto& s = svd.singularValues();
  Index rank = 0;
  for (Index i = 0; i < s.size(); ++i) rank += s(i) > 1e-8 * s(0);
  return n * n - rank;
}

bool same_span(const MatrixStarAlgebra& a, const MatrixStarAlgebra& b) {
  if (a.dim() != b.dim()) return false;
  for (const auto& x : b.basis())
    if (!a.contains(x, 1e-8)) return false;
  return true;
}

}  // namespace

TEST_CASE("operator subspace basics") {
  const auto s = s_offdiag();
  CHECK(s.dim() == 3);
  CHECK(s.unital());
  CHECK(s.contains(from_real({{3, 1}, {1, 3}})));
  CHECK_FALSE(s.contains(Hermitian::diagonal({1, 0})));
  const auto c = s.coordinates(from_real({{3, 1}, {1, 3}}));
  CHECK(c(0) == doctest::Approx(3));
  CHECK(c(1) == doctest::Approx(1));
  CHECK(std::abs(c(2)) < 1e-12);
  CHECK_FALSE(OperatorSubspace({unit_sym(2, 0, 1)}).unital());
  CHECK_THROWS_AS(OperatorSubspace({Hermitian::identity(2), 2.0 * Hermitian::identity(2)}), InputError);
  CHECK_THROWS_AS(OperatorSubspace({Hermitian::identity(2), Hermitian::identity(3)}), InputError);
  CHECK_THROWS_AS(OperatorSubspace(std::vector<Hermitian>{}), InputError);
}

TEST_CASE("generate_algebra examples") {
  const auto a = generate_algebra(s_offdiag());
  CHECK(a.dim() == 4);
  CHECK(a.contains_identity());
  CHECK(generate_algebra(OperatorSubspace({Hermitian::identity(2)})).dim() == 1);
  const auto d = generate_algebra(
      OperatorSubspace({Hermitian::diagonal({1, 0}), Hermitian::diagonal({0, 1})}));
  CHECK(d.dim() == 2);
  CHECK(d.contains(Hermitian::diagonal({3, -1})));
  CHECK(d.closure_residual() <= 1e-8);
  // Real symmetric generator of the off-diagonal type still generates M2.
  CHECK(generate_algebra(OperatorSubspace({unit_sym(2, 0, 1), Hermitian::diagonal({1, 0})}),
                         false).dim() == 4);
}

TEST_CASE("generate_algebra is idempotent and closed") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 10; ++trial) {
    // Block-diagonal generators give a proper subalgebra M2 ⊕ M1 ⊕ M1 ...
    const Index n = 4;
    MatrixXc g = MatrixXc::Zero(n, n);
    g.topLeftCorner(2, 2) = random_hermitian(rng, 2).matrix();
    g(2, 2) = trial;
    const auto a = generate_algebra(OperatorSubspace({Hermitian(g)}), true);
    CHECK(a.closure_residual() <= 1e-8);
    const auto again = generate_algebra(a.as_subspace(), true);
    CHECK(same_span(a, again));
  }
}

TEST_CASE("commutant examples") {
  CHECK(commutant(full_matrix_algebra(2)).dim() == 1);
  const auto d = diagonal_algebra(2);
  CHECK(same_span(commutant(d), d));
  std::mt19937_64 rng(43);
  const Hermitian x = random_hermitian(rng, 3), y = random_hermitian(rng, 3);
  const auto a = generate_algebra(OperatorSubspace({x, y}), true);
  CHECK(a.dim() == 9);
  CHECK(commutant(a).dim() == 1);
  CHECK(kron_commutant_dim({x, y}) == 1);
}

TEST_CASE("commutant agrees with the Kronecker oracle") {
  std::mt19937_64 rng(47);
  for (int trial = 0; trial < 8; ++trial) {
    // Commuting family from a common eigenbasis with a repeated eigenvalue.
    const Index n = 3 + trial % 2;
    const MatrixXc q = random_unitary(rng, n);
    Eigen::VectorXd d(n);
    for (Index i = 0; i < n; ++i) d(i) = double(i % 2);
    const Hermitian h(MatrixXc(q * d.cast<cplx>().asDiagonal() * q.adjoint()));
    CHECK(commutant_dimension({h}) == kron_commutant_dim({h}));
  }
}

TEST_CASE("bicommutant and center") {
  std::mt19937_64 rng(53);
  MatrixXc g = MatrixXc::Zero(3, 3), h = MatrixXc::Zero(3, 3);
  g.topLeftCorner(2, 2) = random_hermitian(rng, 2).matrix();
  h.topLeftCorner(2, 2) = random_hermitian(rng, 2).matrix();
  g(2, 2) = 7.0;
  const auto a = generate_algebra(OperatorSubspace({Hermitian(g), Hermitian(h)}), true);
  CHECK(a.dim() == 5);  // M2 ⊕ C
  CHECK(same_span(commutant(commutant(a)), a));
  CHECK(center(a).dim() == 2);
  CHECK(center(full_matrix_algebra(3)).dim() == 1);
}

TEST_CASE("gns of a vector state on M2") {
  const auto m2 = full_matrix_algebra(2);
  const auto phi = StateFunctional::vector_state(Eigen::Vector2cd(1, 0));
  const auto g = gns(phi, m2);
  CHECK(g.rep_dim == 2);
  std::vector<Hermitian> image;
  for (const auto& r : g.rep) image.push_back(Hermitian(r));
  CHECK(commutant_dimension(image) == 1);
}

TEST_CASE("gns of a character and of the trace") {
  const auto d = diagonal_algebra(2);
  CHECK(gns(StateFunctional(Hermitian::diagonal({1, 0})), d).rep_dim == 1);
  const auto g = gns(StateFunctional::normalized_trace(2), full_matrix_algebra(2));
  CHECK(g.rep_dim == 4);
  std::vector<Hermitian> image;
  for (const auto& r : g.rep) image.push_back(Hermitian(r));
  CHECK(commutant_dimension(image) == 4);
  CHECK_THROWS_AS(gns(StateFunctional::normalized_trace(2),
                      algebra_from_orthonormal({unit_sym(2, 0, 1) * std::sqrt(0.5)})),
                  InputError);
}

TEST_CASE("property: gns invariants on random states") {
  std::mt19937_64 rng(59);
  for (int trial = 0; trial < 12; ++trial) {
    const Index n = 2 + trial % 3;
    const auto a = trial % 2 ? full_matrix_algebra(n) : diagonal_algebra(n);
    const auto phi = StateFunctional(random_density(rng, n, 1 + trial % n));
    const auto g = gns(phi, a);
    const auto& b = a.basis();
    CHECK(std::abs(g.cyclic_vector.norm() - 1.0) <= 1e-8);
    MatrixXc orbit(g.rep_dim, Index(b.size()));
    for (std::size_t i = 0; i < b.size(); ++i) {
      const MatrixXc& p = g.rep[i];
      CHECK(max_entry_diff(p, p.adjoint()) <= 1e-8);
      CHECK(std::abs((g.cyclic_vector.adjoint() * p * g.cyclic_vector)(0) -
                     phi(b[i].matrix())) <= 1e-8);
      orbit.col(Index(i)) = p * g.cyclic_vector;
      for (std::size_t j = 0; j < b.size(); ++j) {
        const MatrixXc prod = b[i].matrix() * b[j].matrix();
        CHECK(max_entry_diff(g.represent(prod, a), g.rep[i] * g.rep[j]) <= 1e-8);
      }
    }
    Eigen::JacobiSVD<MatrixXc> svd(orbit);
    CHECK(svd.rank() == g.rep_dim);
  }
}

TEST_CASE("property: restriction embeds the gram matrix") {
  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 10; ++trial) {
    const Index n = 3;
    const auto a = full_matrix_algebra(n);
    const auto b = diagonal_algebra(n);
    const auto psi = StateFunctional(random_density(rng, n));
    const MatrixXc ka = gns(psi, a).gram;
    const MatrixXc kb = gns(psi, b).gram;
    MatrixXc c(a.dim(), b.dim());
    for (Index j = 0; j < b.dim(); ++j) c.col(j) = a.coordinates(b.basis()[std::size_t(j)].matrix());
    CHECK(max_entry_diff(c.adjoint() * ka * c, kb) <= 1e-9);
  }
}
