#include "doctest.h"
#include "support.hpp"

#include "opsyslab/state_lab.hpp"

using namespace opsyslab;
using namespace testing_support;

namespace {

// span{I, E12 + E21, i(E21 − E12)} in M2.
OperatorSubspace s_offdiag() {
  return OperatorSubspace({Hermitian::identity(2), unit_sym(2, 0, 1), sigma_y()});
}

StateFunctional chi(int k) {
  Eigen::Vector2cd e = Eigen::Vector2cd::Zero();
  e(k) = 1.0;
  return StateFunctional::vector_state(e);
}

// Oracle for extensions of c0 ↦ c0 on s_offdiag: densities [[p, z], [z̄, 1 − p]]
// with z = 0 forced, PSD iff p(1 − p) ≥ 0 (2×2 determinant); scan p.
std::pair<double, double> offdiag_oracle(const Hermitian& t) {
  double lo = 1e300, hi = -1e300;
  for (int k = 0; k <= 4000; ++k) {
    const double p = -0.5 + 2.0 * k / 4000.0;
    if (p * (1 - p) < 0 || p < 0) continue;
    const double v = p * std::real(t(0, 0)) + (1 - p) * std::real(t(1, 1));
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return {lo, hi};
}

void check_witnesses(const ExtensionInterval& iv, const OperatorSubspace& s,
                     const Eigen::VectorXd& values) {
  CHECK((functional_values(iv.min_witness, s) - values).cwiseAbs().maxCoeff() <= 1e-7);
  CHECK((functional_values(iv.max_witness, s) - values).cwiseAbs().maxCoeff() <= 1e-7);
  CHECK(std::abs(iv.min_witness(iv.element) - iv.min) <= 1e-6);
  CHECK(std::abs(iv.max_witness(iv.element) - iv.max) <= 1e-6);
}

}  // namespace

TEST_CASE("verify_state_on_subspace") {
  const auto s = s_offdiag();
  CHECK(verify_state_on_subspace(Eigen::Vector3d(1, 0, 0), s));
  CHECK_FALSE(verify_state_on_subspace(Eigen::Vector3d(2, 0, 0), s));
  // |φ(σx)| ≤ 1 for any state.
  CHECK_FALSE(verify_state_on_subspace(Eigen::Vector3d(1, 1.5, 0), s));
  CHECK_THROWS_AS(verify_state_on_subspace(Eigen::VectorXd::Ones(1),
                                           OperatorSubspace({unit_sym(2, 0, 1)})),
                  InputError);
  std::mt19937_64 rng(71);
  for (int trial = 0; trial < 10; ++trial) {
    const auto phi = StateFunctional(random_density(rng, 2));
    CHECK(verify_state_on_subspace(functional_values(phi, s), s));
  }
}

TEST_CASE("extension interval examples") {
  const auto s = s_offdiag();
  const auto m2 = full_matrix_algebra(2);
  const Eigen::Vector3d phi(1, 0, 0);
  const Hermitian e11 = Hermitian::diagonal({1, 0});
  auto iv = extension_interval(phi, s, e11, m2);
  const auto [olo, ohi] = offdiag_oracle(e11);
  CHECK(iv.min == doctest::Approx(olo).epsilon(1e-7));
  CHECK(iv.max == doctest::Approx(ohi).epsilon(1e-7));
  CHECK(std::abs(iv.min) <= 1e-7);
  CHECK(std::abs(iv.max - 1) <= 1e-7);
  check_witnesses(iv, s, phi);

  const Hermitian t = from_real({{2, 1}, {1, 2}});
  iv = extension_interval(phi, s, t, m2);
  CHECK(iv.length() <= 1e-7);
  CHECK(iv.min == doctest::Approx(2).epsilon(1e-7));

  const OperatorSubspace scal({Hermitian::identity(2)});
  iv = extension_interval(Eigen::VectorXd::Ones(1), scal, Hermitian::diagonal({1, 5}), m2);
  CHECK(iv.min == doctest::Approx(1).epsilon(1e-7));
  CHECK(iv.max == doctest::Approx(5).epsilon(1e-7));
  check_witnesses(iv, scal, Eigen::VectorXd::Ones(1));
}

TEST_CASE("extension interval against the determinant oracle") {
  std::mt19937_64 rng(73);
  const auto s = s_offdiag();
  for (int trial = 0; trial < 10; ++trial) {
    const Hermitian t = random_hermitian(rng, 2);
    const auto iv = extension_interval(Eigen::Vector3d(1, 0, 0), s, t, full_matrix_algebra(2));
    const auto [lo, hi] = offdiag_oracle(t);
    CHECK(std::abs(iv.min - lo) <= 1e-6);
    CHECK(std::abs(iv.max - hi) <= 1e-6);
  }
}

TEST_CASE("property: sandwich for actual extensions") {
  std::mt19937_64 rng(79);
  for (int trial = 0; trial < 15; ++trial) {
    const Index n = 2 + trial % 2;
    const auto a = full_matrix_algebra(n);
    const OperatorSubspace s({Hermitian::identity(n), random_hermitian(rng, n)});
    const auto psi = StateFunctional(random_density(rng, n));
    const Hermitian t = random_hermitian(rng, n);
    const auto iv = extension_interval(psi, s, t, a);
    CHECK(iv.min <= psi(t) + 1e-6);
    CHECK(psi(t) <= iv.max + 1e-6);
    check_witnesses(iv, s, functional_values(psi, s));
  }
}

TEST_CASE("has_uep examples") {
  const auto s = s_offdiag();
  const auto m2 = full_matrix_algebra(2);
  auto r = has_uep(chi(0), s, m2);
  CHECK_FALSE(r.has_uep);
  REQUIRE(r.witness.has_value());
  CHECK(r.witness->element == Hermitian::diagonal({1, 0}));
  CHECK(r.witness->min == doctest::Approx(0).epsilon(1e-6));
  CHECK(r.witness->max == doctest::Approx(1).epsilon(1e-6));

  std::mt19937_64 rng(83);
  CHECK(has_uep(StateFunctional(random_density(rng, 2)), m2.as_subspace(), m2).has_uep);
}

TEST_CASE("ideal UEP in M3 relative to M2 ⊕ C") {
  const auto m3 = full_matrix_algebra(3);
  const auto b = block_algebra(2, 3).as_subspace();
  std::mt19937_64 rng(89);
  for (int trial = 0; trial < 4; ++trial) {
    const auto x = embed(random_density(rng, 2), 3);
    CHECK(has_uep(StateFunctional(x), b, m3).has_uep);
  }
  CHECK_FALSE(has_uep(StateFunctional(Hermitian::diagonal({0.5, 0, 0.5})), b, m3).has_uep);
}

TEST_CASE("is_pure examples") {
  const auto m2 = full_matrix_algebra(2);
  const double g = 1.0 / std::sqrt(2.0);
  const auto omega = StateFunctional::vector_state(Eigen::Vector2cd(g, g));
  CHECK(is_pure(omega, m2));
  CHECK_FALSE(is_pure(omega, diagonal_algebra(2)));
  CHECK_FALSE(is_pure(StateFunctional::normalized_trace(2), m2));
  CHECK(is_pure(chi(1), diagonal_algebra(2)));
}

TEST_CASE("property: purity on M_n matches rank one") {
  std::mt19937_64 rng(97);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = 2 + trial % 3;
    const Index rank = 1 + trial % n;
    const auto phi = StateFunctional(random_density(rng, n, rank));
    CHECK(is_pure(phi, full_matrix_algebra(n)) == (rank == 1));
  }
}

TEST_CASE("pure_decomposition examples") {
  const auto m2 = full_matrix_algebra(2);
  auto d = pure_decomposition(chi(0), m2);
  REQUIRE(d.atoms.size() == 1);
  CHECK(d.atoms[0].weight == doctest::Approx(1));

  d = pure_decomposition(StateFunctional::normalized_trace(2), m2);
  REQUIRE(d.atoms.size() == 2);
  for (const auto& at : d.atoms) {
    CHECK(at.weight == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(is_pure(at.state, m2));
  }
  CHECK(max_entry_diff(d.reconstruct().matrix(), MatrixXc::Identity(2, 2) / 2.0) <= 1e-12);

  const Eigen::Vector2cd xi(cplx(0.6, 0), cplx(0, 0.8));
  d = pure_decomposition(StateFunctional::vector_state(xi), diagonal_algebra(2));
  REQUIRE(d.atoms.size() == 2);
  std::vector<double> w = {d.atoms[0].weight, d.atoms[1].weight};
  std::sort(w.begin(), w.end());
  CHECK(w[0] == doctest::Approx(0.36).epsilon(1e-12));
  CHECK(w[1] == doctest::Approx(0.64).epsilon(1e-12));
}

TEST_CASE("property: pure decompositions reconstruct and have pure atoms") {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 15; ++trial) {
    const Index n = 3;
    const auto a = trial % 3 == 0 ? full_matrix_algebra(n)
                   : trial % 3 == 1 ? diagonal_algebra(n) : block_algebra(2, n);
    const auto phi = StateFunctional(random_density(rng, n));
    const auto d = pure_decomposition(phi, a);
    double total = 0;
    for (const auto& at : d.atoms) {
      total += at.weight;
      CHECK(at.weight > 0);
      CHECK(is_pure(at.state, a));
    }
    CHECK(std::abs(total - 1) <= 1e-9);
    CHECK(max_entry_diff(d.reconstruct().matrix(), a.project(phi.density()).matrix()) <= 1e-8);
    for (const auto& b : a.basis()) {
      double v = 0;
      for (const auto& at : d.atoms) v += at.weight * at.state(b);
      CHECK(std::abs(v - phi(b)) <= 1e-9);
    }
  }
}

TEST_CASE("find_pure_majorizing_state") {
  const auto m2 = full_matrix_algebra(2);
  const Hermitian a = Hermitian::diagonal({1, -1});
  const auto r = find_pure_majorizing_state(StateFunctional::normalized_trace(2), a, m2, m2);
  CHECK(r.found);
  CHECK(std::abs(r.value) == doctest::Approx(1).epsilon(1e-7));
  CHECK(is_pure(r.state, m2));

  // Three-term mixture of vector states in M4, B = M4.
  std::mt19937_64 rng(103);
  const auto m4 = full_matrix_algebra(4);
  MatrixXc x = MatrixXc::Zero(4, 4);
  const double t[3] = {0.5, 0.3, 0.2};
  for (double w : t) {
    Eigen::VectorXcd xi = gaussian_matrix(rng, 4, 1);
    xi.normalize();
    x += w * xi * xi.adjoint();
  }
  const Hermitian h = random_hermitian(rng, 4);
  const auto theta = StateFunctional(Hermitian(x));
  const auto r4 = find_pure_majorizing_state(theta, h, m4, m4);
  CHECK(r4.found);
  CHECK(std::abs(r4.value) >= std::abs(theta(h)) - 1e-6);
  CHECK(is_pure(r4.state, m4));
}

TEST_CASE("find_pure_majorizing_state with B a proper subalgebra") {
  // θ supported in the M2 block of M3 has the UEP relative to M2 ⊕ C.
  std::mt19937_64 rng(107);
  const auto m3 = full_matrix_algebra(3);
  const auto b = block_algebra(2, 3);
  const auto theta = StateFunctional(embed(random_density(rng, 2), 3));
  const Hermitian a = random_hermitian(rng, 3);
  const auto r = find_pure_majorizing_state(theta, a, b, m3);
  CHECK(r.found);
  CHECK(std::abs(r.value) >= std::abs(theta(a)) - 1e-6);
  CHECK(is_pure(r.state, b));
  CHECK_THROWS_AS(find_pure_majorizing_state(StateFunctional::normalized_trace(3), a, b, m3),
                  InputError);
}

TEST_CASE("property: atoms inherit the UEP") {
  std::mt19937_64 rng(109);
  const auto m4 = full_matrix_algebra(4);
  const auto b = block_algebra(2, 4).as_subspace();
  int with_uep = 0;
  for (int trial = 0; trial < 6; ++trial) {
    // Mixtures of vector states in the M2 block, occasionally with e3.
    const int k = 1 + trial % 3;
    std::vector<Eigen::VectorXcd> xs;
    MatrixXc x = MatrixXc::Zero(4, 4);
    std::vector<double> w(std::size_t(k), 1.0 / k);
    for (int i = 0; i < k; ++i) {
      Eigen::VectorXcd xi = Eigen::VectorXcd::Zero(4);
      if (trial % 5 == 4 && i == 0) xi(2) = 1.0;
      else xi.head(2) = gaussian_matrix(rng, 2, 1);
      xi.normalize();
      xs.push_back(xi);
      x += w[std::size_t(i)] * xi * xi.adjoint();
    }
    if (!has_uep(StateFunctional(Hermitian(x)), b, m4).has_uep) continue;
    ++with_uep;
    for (const auto& xi : xs) CHECK(has_uep(StateFunctional::vector_state(xi), b, m4).has_uep);
  }
  CHECK(with_uep >= 4);
}

TEST_CASE("property: pure restriction transfer") {
  std::mt19937_64 rng(113);
  const auto m3 = full_matrix_algebra(3);
  const auto b = block_algebra(2, 3);
  for (int trial = 0; trial < 6; ++trial) {
    Eigen::VectorXcd xi = Eigen::VectorXcd::Zero(3);
    if (trial % 2) xi.head(2) = gaussian_matrix(rng, 2, 1);
    else xi = gaussian_matrix(rng, 3, 1);
    xi.normalize();
    const auto chi_state = StateFunctional::vector_state(xi);
    REQUIRE(is_pure(chi_state, m3));
    if (has_uep(chi_state, b.as_subspace(), m3).has_uep) CHECK(is_pure(chi_state, b));
  }
}

TEST_CASE("interval ends match inf{φ(s) : s ⪰ t} when it is attained") {
  // Faithful φ makes the infimum attained; solve it directly as an oracle.
  std::mt19937_64 rng(127);
  for (int trial = 0; trial < 8; ++trial) {
    const Index n = 3;
    const OperatorSubspace s({Hermitian::identity(n), random_hermitian(rng, n), random_hermitian(rng, n)});
    const auto phi = StateFunctional(random_density(rng, n));
    const Hermitian t = random_hermitian(rng, n);
    SdpProblem p;
    p.objective = functional_values(phi, s);
    p.blocks = {LmiBlock{-t, s.basis()}};
    const auto upper = solve(p);
    REQUIRE(upper.ok());
    const auto iv = extension_interval(phi, s, t, full_matrix_algebra(n));
    CHECK(std::abs(iv.max - upper.value) <= 1e-6);
  }
}
