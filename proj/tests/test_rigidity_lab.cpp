#include "doctest.h"
#include "support.hpp"

#include <random>

#include <unsupported/Eigen/KroneckerProduct>

#include "opsyslab/rigidity_lab.hpp"
#include "opsyslab/state_lab.hpp"

using namespace opsyslab;
using namespace testing_support;

namespace {

Hermitian diag(std::vector<double> d) { return Hermitian::diagonal(d); }

OperatorSubspace span1(const Hermitian& h) { return OperatorSubspace({h}); }

OperatorSubspace diagonal_span(Index n) { return diagonal_algebra(n).as_subspace(); }

OperatorSubspace s_offdiag() {
  return OperatorSubspace({Hermitian::identity(2), unit_sym(2, 0, 1), sigma_y()});
}

bool admissible(const Hermitian& a, const Hermitian& bp, const Hermitian& b, double tol) {
  return lambda_min(bp - a) >= -tol && lambda_min(b - bp) >= -tol && op_norm(bp) <= op_norm(a) + tol;
}

// Commuting pair a ⪯ b in a random common eigenbasis.
std::pair<Hermitian, Hermitian> commuting_pair(std::mt19937_64& rng, Index n) {
  std::normal_distribution<double> g;
  const MatrixXc u = random_unitary(rng, n);
  Eigen::VectorXd da(n), db(n);
  for (Index i = 0; i < n; ++i) {
    da(i) = 3 * g(rng);
    db(i) = da(i) + std::abs(3 * g(rng));
  }
  const auto conj = [&](const Eigen::VectorXd& d) {
    return Hermitian(MatrixXc(u * d.cast<cplx>().asDiagonal() * u.adjoint()));
  };
  return {conj(da), conj(db)};
}

}  // namespace

TEST_CASE("unperforated instance: matrices of the three-dimensional example") {
  const Hermitian s = diag({-2, -1, -1}), t = diag({1, -2, 1});
  const Hermitian b = 0.5 * t;
  const auto inst = solve_unperforated_instance(span1(s), span1(t), s, b);
  CHECK(inst.verdict == Verdict::Feasible);
  REQUIRE(inst.b_prime);
  CHECK(max_entry_diff(inst.b_prime->matrix(), b.matrix()) < 1e-12);
  CHECK(op_norm(*inst.b_prime) == doctest::Approx(1.0));
  CHECK(op_norm(s) == doctest::Approx(2.0));

  // Without shortcuts the SDP must land on λt with λ forced: the diagonal
  // inequalities λ + 2 ≥ 0, 1 − 2λ ≥ 0, λ + 1 ≥ 0 and (½ − λ)t ⪰ 0 with t
  // indefinite leave λ = ½ only.
  InstanceOptions opt;
  opt.shortcuts = false;
  const auto sdp = solve_unperforated_instance(span1(s), span1(t), s, b, opt);
  CHECK(sdp.method == "sdp");
  REQUIRE(sdp.verdict == Verdict::Feasible);
  CHECK(max_entry_diff(sdp.b_prime->matrix(), b.matrix()) < 1e-6);
}

TEST_CASE("unperforated instance: off-diagonal against diagonal") {
  const Hermitian a = 2.0 * unit_sym(2, 0, 1), b = diag({1, 5});
  const auto inst = solve_unperforated_instance(span1(unit_sym(2, 0, 1)), diagonal_span(2), a, b);
  CHECK(inst.verdict == Verdict::Infeasible);
  REQUIRE(inst.residuals);
  CHECK(inst.residuals->valid());
  CHECK(inst.certificate.size() == 4);
  // Oracle: b' = diag(x, y) with a ⪯ b' needs xy ≥ 4, x, y ≥ 0, and ‖b'‖ ≤ 2
  // then forces x = y = 2, but b − b' = diag(−1, 3) is not PSD.
  bool any = false;
  for (int i = 0; i <= 200; ++i)
    for (int j = 0; j <= 200; ++j) {
      const double x = -2 + 4.0 * i / 200, y = -2 + 4.0 * j / 200;
      if (x >= 0 && y >= 0 && x * y >= 4 && x <= 1 && y <= 5) any = true;
    }
  CHECK_FALSE(any);
}

TEST_CASE("unperforated instance: trivial and error cases") {
  const OperatorSubspace d = diagonal_span(3);
  const Hermitian a = diag({1, -2, 0}), b = diag({3, 0, 1});
  const auto inst = solve_unperforated_instance(d, d, a, b);
  CHECK(inst.verdict == Verdict::Feasible);
  CHECK(*inst.b_prime == a);
  CHECK(inst.method == "a in T");

  CHECK_THROWS_AS(solve_unperforated_instance(d, d, b, a), InputError);
  CHECK_THROWS_AS(solve_unperforated_instance(span1(unit_sym(3, 0, 1)), d, a, b), InputError);
  CHECK_THROWS_AS(solve_unperforated_instance(d, span1(unit_sym(3, 0, 1)), a, b), InputError);
}

TEST_CASE("rank-one decision reproduces the scalar inequality system") {
  const Hermitian s = diag({-2, -1, -1}), t = diag({1, -2, 1});
  const auto dec = decide_rank_one(s, t);
  CHECK(dec.unperforated);
  CHECK(dec.t_sign == 0);
  CHECK(dec.radius == doctest::Approx(1.0));
  // βt − s ⪰ 0: −2 ≤ β... per entry β + 2 ≥ 0, 1 − 2β ≥ 0, β + 1 ≥ 0.
  CHECK_FALSE(dec.plus.empty);
  CHECK(dec.plus.lo == doctest::Approx(-1.0).epsilon(1e-7));
  CHECK(dec.plus.hi == doctest::Approx(0.5).epsilon(1e-7));
  // βt + s ⪰ 0 needs β ≥ 2 and β ≤ −½.
  CHECK(dec.minus.empty);
}

TEST_CASE("rank-one decision finds a perforated pair") {
  // s = diag(2, 0), t = diag(1, 3): βt ⪰ s iff β ≥ 2, but ‖γt‖ ≤ ‖s‖ needs γ ≤ 2/3.
  const Hermitian s = diag({2, 0}), t = diag({1, 3});
  const auto dec = decide_rank_one(s, t);
  CHECK_FALSE(dec.unperforated);
  CHECK(dec.t_sign == 1);
  REQUIRE(dec.counterexample);
  CHECK(dec.counterexample->first == 1.0);
  CHECK(dec.counterexample->second == doctest::Approx(2.0).epsilon(1e-7));
  const auto inst = solve_unperforated_instance(span1(s), span1(t), s, 2.0 * t);
  CHECK(inst.verdict == Verdict::Infeasible);

  // Positive t with a matching radius: s = I, t = I.
  CHECK(decide_rank_one(Hermitian::identity(2), Hermitian::identity(2)).unperforated);
}

TEST_CASE("search_counterexample") {
  SUBCASE("off-diagonal against diagonal") {
    const auto found = search_counterexample(span1(unit_sym(2, 0, 1)), diagonal_span(2), 100, 7);
    REQUIRE(found);
    CHECK(found->verdict == Verdict::Infeasible);
    CHECK(found->residuals->valid());
    CHECK(op_norm(found->a) == doctest::Approx(1.0));
  }
  SUBCASE("S inside T") {
    CHECK_FALSE(search_counterexample(OperatorSubspace({diag({1, 2, 3})}), diagonal_span(3), 20, 1));
  }
  SUBCASE("S commuting with an algebra T") {
    // S = span{σx ⊗ I}, T = I ⊗ M2.
    const MatrixXc sx = unit_sym(2, 0, 1).matrix();
    const MatrixXc i2 = MatrixXc::Identity(2, 2);
    std::vector<Hermitian> tb;
    for (const auto& h : canonical_hermitian_basis(2))
      tb.push_back(Hermitian(MatrixXc(Eigen::kroneckerProduct(i2, h.matrix()))));
    const OperatorSubspace s({Hermitian(MatrixXc(Eigen::kroneckerProduct(sx, i2)))});
    CHECK_FALSE(search_counterexample(s, OperatorSubspace(tb), 30, 11));
  }
  CHECK_THROWS_AS(search_counterexample(diagonal_span(2), diagonal_span(2), 0, 1), InputError);
}

TEST_CASE("truncate_commuting examples") {
  const Hermitian a = diag({-2, -1}), b = diag({5, 0});
  const Hermitian bp = truncate_commuting(a, b);
  CHECK(max_entry_diff(bp.matrix(), diag({2, 0}).matrix()) < 1e-12);
  CHECK(admissible(a, bp, b, 1e-12));
  CHECK(truncate_commuting(diag({-3, 0}), diag({1, 2})) == diag({1, 2}));
  CHECK_THROWS_AS(truncate_commuting(diag({0, 1}), unit_sym(2, 0, 1) + Hermitian::identity(2) * 2),
                  InputError);
  CHECK_THROWS_AS(truncate_commuting(diag({1, 0}), diag({0, 0})), InputError);
}

TEST_CASE("property: commuting truncation is admissible and agrees with the SDP") {
  std::mt19937_64 rng(2024);
  InstanceOptions opt;
  opt.shortcuts = false;
  for (int trial = 0; trial < 40; ++trial) {
    const Index n = 2 + trial % 5;
    const auto [a, b] = commuting_pair(rng, n);
    const Hermitian bp = truncate_commuting(a, b);
    CHECK(admissible(a, bp, b, 1e-8 * (1 + op_norm(b))));
    // Diagonal oracle in the common eigenbasis: clamp each eigenvalue of b.
    const auto e = eigh(b);
    const double r = op_norm(a);
    for (Index i = 0; i < n; ++i) {
      const Eigen::VectorXcd v = e.eigenvectors.col(i);
      const double expect = std::clamp(e.eigenvalues(i), -r, r);
      CHECK(std::abs(std::real(v.dot(bp.matrix() * v)) - expect) < 1e-8 * (1 + r));
    }
    if (trial % 8 == 0) {
      const auto sa = span1(a);
      const auto tb = generate_algebra(span1(b), true).as_subspace();
      const auto inst = solve_unperforated_instance(sa, tb, a, b, opt);
      CHECK(inst.verdict == Verdict::Feasible);
    }
  }
}

TEST_CASE("separation witness on commuting examples") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 4; ++trial) {
    const Index n = 2 + trial;
    const auto [s, b] = commuting_pair(rng, n);
    // Norm-attaining vector state of s, then a state pure on T = M_n.
    const auto e = eigh(s);
    const Index k = std::abs(e.eigenvalues(0)) > std::abs(e.eigenvalues(n - 1)) ? 0 : n - 1;
    const Eigen::VectorXcd xi = e.eigenvectors.col(k);
    const StateFunctional theta = StateFunctional::vector_state(xi);
    const auto full = full_matrix_algebra(n);
    const auto res = find_pure_majorizing_state(theta, s, full, full);
    CHECK(res.found);
    CHECK(std::abs(res.state(s)) >= op_norm(s) - 1e-6);
    CHECK(is_pure(res.state, full));
  }
}

TEST_CASE("riesz_sequence: scalar algebra") {
  InterpolationRequest req;
  req.b = algebra_from_orthonormal({Hermitian::identity(2) * (1 / std::sqrt(2.0))});
  req.a = diag({0, 1});
  req.lowers = {Hermitian::zero(2)};
  req.uppers = {Hermitian::identity(2)};
  req.epsilon = 1.0;
  req.length = 5;
  const auto seq = riesz_sequence(req);
  REQUIRE(seq.size() == 5);
  for (int n = 1; n <= 5; ++n) {
    const Hermitian& beta = seq[std::size_t(n - 1)];
    const double c = std::real(beta(0, 0));
    CHECK(std::abs(std::real(beta(1, 1)) - c) < 1e-9);
    // Interval intersection: (−1/n, 1 + 1/n) ∩ [−(1 + 1/n), 1 + 1/n]; the
    // smallest slack min(c + 1/n, 1 + 1/n − c) peaks at c = ½.
    CHECK(c > -1.0 / n);
    CHECK(c < 1.0 + 1.0 / n);
    CHECK(c == doctest::Approx(0.5).epsilon(1e-6));
    const auto f = check_feasibility(riesz_blocks(req, n), 0.0);
    CHECK(f.ok());
    CHECK(f.value >= 1.0 / n - 1e-7);
    CHECK(f.value == doctest::Approx(0.5 + 1.0 / n).epsilon(1e-6));
  }
}

TEST_CASE("riesz_sequence: a in B interpolates itself") {
  InterpolationRequest req;
  req.b = diagonal_algebra(3);
  req.a = diag({1, -1, 0.5});
  req.lowers = {diag({0, -2, 0})};
  req.uppers = {diag({1, 0, 3})};
  req.length = 3;
  for (int n = 1; n <= 3; ++n) {
    const auto blocks = riesz_blocks(req, n);
    const Eigen::VectorXd x = req.b.as_subspace().coordinates(req.a);
    for (const auto& blk : blocks) CHECK(lambda_min(blk.evaluate(x)) >= -1e-12);
  }
  CHECK(riesz_sequence(req).size() == 3);
}

TEST_CASE("property: riesz bounds and the finite-n surrogate") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 6; ++trial) {
    InterpolationRequest req;
    req.b = block_algebra(2, 3);
    req.a = random_hermitian(rng, 3);
    req.epsilon = 0.5;
    req.length = 6;
    const double na = op_norm(req.a);
    req.lowers = {-na * Hermitian::identity(3)};
    req.uppers = {na * Hermitian::identity(3)};
    add_extreme_bounds(req, 2, 1000 + trial);
    REQUIRE(req.uppers.size() == 3);
    req.validate(1e-7);
    const auto seq = riesz_sequence(req);
    std::vector<StateFunctional> tests;
    for (int k = 0; k < 5; ++k) tests.emplace_back(req.b.project(random_density(rng, 3)));
    for (int n = 1; n <= req.length; ++n) {
      const Hermitian& beta = seq[std::size_t(n - 1)];
      CHECK(req.b.contains(beta, 1e-8));
      CHECK(op_norm(beta) <= (1 + req.epsilon / n) * na + 1e-6);
      for (const auto& psi : tests) {
        double up = 1e300, lo = -1e300;
        for (const auto& u : req.uppers) up = std::min(up, psi(u));
        for (const auto& l : req.lowers) lo = std::max(lo, psi(l));
        CHECK(psi(beta) <= up + 2.0 / n);
        CHECK(psi(beta) >= lo - 2.0 / n);
      }
    }
  }
}

TEST_CASE("InterpolationRequest validation") {
  InterpolationRequest req;
  req.b = diagonal_algebra(2);
  req.a = diag({1, 0});
  req.uppers = {diag({0, 1})};
  CHECK_THROWS_AS(req.validate(), InputError);
  req.uppers = {unit_sym(2, 0, 1) + 2.0 * Hermitian::identity(2)};
  CHECK_THROWS_AS(req.validate(), InputError);
  req.uppers = {Hermitian::identity(2)};
  req.epsilon = 0;
  CHECK_THROWS_AS(req.validate(), InputError);
  req.epsilon = 1;
  CHECK_NOTHROW(req.validate());
}

TEST_CASE("ChoiMap") {
  std::mt19937_64 rng(3);
  const MatrixXc x = gaussian_matrix(rng, 3, 3);
  CHECK(max_entry_diff(ChoiMap::identity(3).apply(x), x) < 1e-14);
  const MatrixXc d = ChoiMap::diagonal_expectation(3).apply(x);
  CHECK(max_entry_diff(d, MatrixXc(x.diagonal().asDiagonal())) < 1e-14);

  // Unital channel with Kraus operators √p U, √(1−p) V against Σ K X K*.
  const MatrixXc u = random_unitary(rng, 3), v = random_unitary(rng, 3);
  const double p = 0.3;
  const ChoiMap phi = ChoiMap::from_kraus({std::sqrt(p) * u, std::sqrt(1 - p) * v});
  const MatrixXc direct = p * u * x * u.adjoint() + (1 - p) * v * x * v.adjoint();
  CHECK(max_entry_diff(phi.apply(x), direct) < 1e-12);

  CHECK_THROWS_AS(ChoiMap(2, 2, -Hermitian::identity(4)), InputError);
  CHECK_THROWS_AS(ChoiMap(2, 2, Hermitian::identity(4)), InputError);  // Φ(I) = 2I
  CHECK_NOTHROW(ChoiMap(2, 2, Hermitian::identity(4), false));
  CHECK_THROWS_AS(ChoiMap(2, 3, Hermitian::identity(4)), InputError);
}

TEST_CASE("ucp_fixed_extent examples") {
  SUBCASE("span{I, E12, E21}") {
    const auto r = ucp_fixed_extent(s_offdiag());
    CHECK(r.max_deviation <= 1e-6);
    CHECK_FALSE(r.witness);
    CHECK(r.sdp_count == 4 * 8);
  }
  SUBCASE("full matrix algebra") {
    CHECK(ucp_fixed_extent(full_matrix_algebra(2).as_subspace()).max_deviation <= 1e-6);
  }
  SUBCASE("diagonal subspace") {
    const auto r = ucp_fixed_extent(diagonal_span(2));
    CHECK(r.max_deviation >= 1 - 1e-6);
    // Oracle: fixed maps send E12 to cE12 with |c| ≤ 1 (2×2 Choi block
    // positivity); on (E12 + E21)/√2 the largest entry move is |c − 1|/√2 ≤ √2.
    CHECK(r.max_deviation == doctest::Approx(std::sqrt(2.0)).epsilon(1e-5));
    REQUIRE(r.witness);
    const ChoiMap& w = *r.witness;
    CHECK(lambda_min(w.choi()) >= -1e-8);
    CHECK(max_entry_diff(w.apply(MatrixXc::Identity(2, 2)), MatrixXc::Identity(2, 2)) < 1e-6);
    const OperatorSubspace d2 = diagonal_span(2);
    for (const auto& s : d2.basis())
      CHECK(max_entry_diff(w.apply(s.matrix()), s.matrix()) < 1e-6);
    // The diagonal compression is one of the fixed maps and moves E12 + E21.
    const ChoiMap e = ChoiMap::diagonal_expectation(2);
    CHECK(max_entry_diff(e.apply(unit_sym(2, 0, 1).matrix()), unit_sym(2, 0, 1).matrix()) == 1.0);
  }
  SUBCASE("diagonal subspace of M3") {
    CHECK(ucp_fixed_extent(diagonal_span(3)).max_deviation >= 1 - 1e-6);
  }
  CHECK_THROWS_AS(ucp_fixed_extent(diagonal_span(5)), InputError);
}

TEST_CASE("deviation zero makes functional ranges degenerate") {
  std::mt19937_64 rng(8);
  const OperatorSubspace s = s_offdiag();
  for (int trial = 0; trial < 4; ++trial) {
    const Eigen::VectorXcd xi = gaussian_matrix(rng, 2, 1).col(0).normalized();
    const Hermitian rho(MatrixXc(xi * xi.adjoint()));
    const Hermitian t = random_hermitian(rng, 2);
    const auto [lo, hi] = ucp_functional_range(s, rho, t);
    CHECK(hi - lo <= 1e-6);
    CHECK(lo == doctest::Approx(std::real((rho.matrix() * t.matrix()).trace())).epsilon(1e-6));
  }
  // On the diagonal subspace the range is a genuine interval.
  const Hermitian rho(MatrixXc(MatrixXc::Constant(2, 2, 0.5)));
  const auto [lo, hi] = ucp_functional_range(diagonal_span(2), rho, unit_sym(2, 0, 1));
  CHECK(lo == doctest::Approx(-1.0).epsilon(1e-6));
  CHECK(hi == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("nosp_check examples") {
  const auto m2 = full_matrix_algebra(2);
  std::vector<Hermitian> id_images(m2.basis().begin(), m2.basis().end());
  SUBCASE("Π = π") { CHECK(std::abs(nosp_check(id_images, ChoiMap::identity(2), m2)) <= 1e-6); }
  SUBCASE("diagonal conditional expectation") {
    const double lam = nosp_check(id_images, ChoiMap::diagonal_expectation(2), m2);
    CHECK(lam <= 1e-6);
    CHECK(lam >= -1e-6);
  }
  SUBCASE("random unitary representation, forced agreement") {
    std::mt19937_64 rng(12);
    const MatrixXc u = random_unitary(rng, 2);
    std::vector<Hermitian> images;
    for (const auto& b : m2.basis()) images.push_back(Hermitian(MatrixXc(u * b.matrix() * u.adjoint())));
    const ChoiMap pi = ChoiMap::from_kraus({u});
    const OperatorSubspace s2 = s_offdiag();
    for (const auto& s : s2.basis())
      CHECK(max_entry_diff(pi.apply(s.matrix()), u * s.matrix() * u.adjoint()) < 1e-12);
    CHECK(std::abs(nosp_check(images, pi, m2)) <= 1e-6);
  }
  SUBCASE("a strictly positive difference") {
    // Φ = 0 (not unital): λ* = max{λ_min(a) : ‖a‖ ≤ 1} = 1 at a = I.
    const ChoiMap zero(2, 2, Hermitian::zero(4), false);
    CHECK(nosp_check(id_images, zero, m2) == doctest::Approx(1.0).epsilon(1e-6));
  }
  CHECK_THROWS_AS(nosp_check({}, ChoiMap::identity(2), m2), InputError);
}
