#include "opsyslab/rigidity_lab.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace opsyslab {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string sdp_context(const char* what, const SdpSolution& s) {
  return std::string(what) + ": " + to_string(s.status) +
         (s.message.empty() ? "" : " (" + s.message + ")");
}

Hermitian scaled_identity(Index n, double s) { return s * Hermitian::identity(n); }

std::vector<Hermitian> negated(const std::vector<Hermitian>& v) {
  std::vector<Hermitian> out;
  out.reserve(v.size());
  for (const auto& h : v) out.push_back(-h);
  return out;
}

Hermitian random_density(std::mt19937_64& rng, Index n) {
  std::normal_distribution<double> g;
  MatrixXc m(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) m(i, j) = cplx(g(rng), g(rng));
  MatrixXc x = m * m.adjoint();
  x /= std::real(x.trace());
  return Hermitian(x);
}

VectorXd trace_pairing(const Hermitian& c, const std::vector<Hermitian>& basis) {
  VectorXd v(Index(basis.size()));
  for (std::size_t i = 0; i < basis.size(); ++i) v(Index(i)) = real_inner(c, basis[i]);
  return v;
}

double scale_of(std::initializer_list<const Hermitian*> hs) {
  double s = 1.0;
  for (const auto* h : hs) s = std::max(s, op_norm(*h));
  return s;
}

}  // namespace

std::string to_string(Verdict v) { return v == Verdict::Feasible ? "FEASIBLE" : "INFEASIBLE"; }

// ---------------------------------------------------------------------------
// Unperforated pairs

std::vector<LmiBlock> unperforated_blocks(const OperatorSubspace& t, const Hermitian& a,
                                          const Hermitian& b) {
  const Index n = a.dim();
  const double na = op_norm(a);
  const auto& tb = t.basis();
  return {
      LmiBlock{-a, tb},
      LmiBlock{b, negated(tb)},
      LmiBlock{scaled_identity(n, na), negated(tb)},
      LmiBlock{scaled_identity(n, na), tb},
  };
}

UnperforatedInstance solve_unperforated_instance(const OperatorSubspace& s,
                                                 const OperatorSubspace& t, const Hermitian& a,
                                                 const Hermitian& b,
                                                 const InstanceOptions& options) {
  if (s.ambient_dim() != t.ambient_dim() || a.dim() != s.ambient_dim() || b.dim() != a.dim())
    throw InputError("unperforated instance: dimension mismatch");
  if (!s.contains(a, 1e-8 * scale_of({&a}))) throw InputError("unperforated instance: a not in S");
  if (!t.contains(b, 1e-8 * scale_of({&b}))) throw InputError("unperforated instance: b not in T");
  if (!is_psd(b - a, options.psd_tol)) throw InputError("unperforated instance: a is not below b");

  UnperforatedInstance out{s, t, a, b, Verdict::Infeasible, std::nullopt, {}, std::nullopt, {}};
  const double na = op_norm(a);
  if (options.shortcuts && t.contains(a, 1e-9 * scale_of({&a}))) {
    out.verdict = Verdict::Feasible;
    out.b_prime = a;
    out.method = "a in T";
    return out;
  }
  if (options.shortcuts && op_norm(b) <= na) {
    out.verdict = Verdict::Feasible;
    out.b_prime = b;
    out.method = "norm of b";
    return out;
  }

  out.method = "sdp";
  const auto blocks = unperforated_blocks(t, a, b);
  const PreparedSdp sdp(blocks, t.dim(), 0.0, options.sdp);
  const SdpSolution& f = sdp.feasibility();
  if (f.status == SdpStatus::Optimal) {
    const Hermitian bp = combine(t.basis(), f.x);
    const double tol = options.psd_tol * scale_of({&a, &b});
    if (!is_psd(bp - a, tol) || !is_psd(b - bp, tol) || op_norm(bp) > na + tol)
      throw NumericalFailure("unperforated instance: SDP point failed re-verification");
    out.verdict = Verdict::Feasible;
    out.b_prime = bp;
    return out;
  }
  if (f.status == SdpStatus::Infeasible && f.dual_certificate) {
    const auto res = verify_certificate(blocks, *f.dual_certificate);
    if (!res.valid(options.sdp.certificate_tol))
      throw NumericalFailure("unperforated instance: certificate failed re-verification");
    out.verdict = Verdict::Infeasible;
    out.certificate = *f.dual_certificate;
    out.residuals = res;
    return out;
  }
  throw NumericalFailure(sdp_context("unperforated instance", f));
}

namespace {

// {β : βt − σs ⪰ 0} from two one-variable SDPs.
ScalarInterval admissible_interval(const Hermitian& s, const Hermitian& t, double sigma,
                                   const SdpConfig& config) {
  SdpProblem p;
  p.blocks = {LmiBlock{-sigma * s, {t}}};
  ScalarInterval iv;
  double ends[2];
  for (int k = 0; k < 2; ++k) {
    p.objective = VectorXd::Constant(1, k == 0 ? 1.0 : -1.0);
    const SdpSolution sol = solve(p, config);
    if (sol.status == SdpStatus::Infeasible) {
      iv.empty = true;
      return iv;
    }
    if (sol.status == SdpStatus::Unbounded) {
      ends[k] = k == 0 ? -kInf : kInf;
      continue;
    }
    if (!sol.ok()) throw NumericalFailure(sdp_context("rank-one interval", sol));
    ends[k] = sol.x(0);
  }
  iv.lo = ends[0];
  iv.hi = ends[1];
  return iv;
}

}  // namespace

RankOneDecision decide_rank_one(const Hermitian& s, const Hermitian& t, const SdpConfig& config) {
  if (s.dim() != t.dim()) throw InputError("decide_rank_one: dimension mismatch");
  const double ns = op_norm(s), nt = op_norm(t);
  if (ns == 0.0 || nt == 0.0) throw InputError("decide_rank_one: zero generator");
  RankOneDecision out;
  out.radius = ns / nt;
  const double lo = lambda_min(t), hi = lambda_max(t);
  out.t_sign = lo >= -1e-12 * nt ? 1 : (hi <= 1e-12 * nt ? -1 : 0);
  const double tol = 1e-7 * std::max(1.0, out.radius);

  for (double sigma : {1.0, -1.0}) {
    ScalarInterval iv = admissible_interval(s, t, sigma, config);
    (sigma > 0 ? out.plus : out.minus) = iv;
    if (iv.empty || out.counterexample) continue;
    // β ∈ I_σ needs γ ∈ I_σ with (β − γ)t ⪰ 0 and |γ| ≤ R. Indefinite t forces
    // γ = β; t ⪰ 0 allows any γ ∈ [lo, β]; t ⪯ 0 any γ ∈ [β, hi].
    std::optional<double> bad;
    if (out.t_sign == 0) {
      if (iv.lo < -out.radius - tol) bad = iv.lo;
      else if (iv.hi > out.radius + tol) bad = iv.hi;
    } else if (out.t_sign > 0) {
      if (std::abs(iv.lo) > out.radius + tol) bad = iv.lo;
    } else {
      if (std::abs(iv.hi) > out.radius + tol) bad = iv.hi;
    }
    if (bad) {
      if (!std::isfinite(*bad)) throw NumericalFailure("decide_rank_one: unbounded endpoint");
      out.unperforated = false;
      out.counterexample = std::make_pair(sigma, *bad);
    }
  }
  return out;
}

std::optional<UnperforatedInstance> search_counterexample(const OperatorSubspace& s,
                                                          const OperatorSubspace& t, int trials,
                                                          std::uint64_t seed,
                                                          const InstanceOptions& options) {
  if (trials < 1) throw InputError("search_counterexample: trials must be positive");
  if (s.ambient_dim() != t.ambient_dim())
    throw InputError("search_counterexample: dimension mismatch");
  const Index n = s.ambient_dim();
  for (int trial = 0; trial < trials; ++trial) {
    std::mt19937_64 rng(seed + std::uint64_t(trial));
    std::normal_distribution<double> g;
    VectorXd coef(s.dim());
    for (Index i = 0; i < s.dim(); ++i) coef(i) = g(rng);
    Hermitian a = combine(s.basis(), coef);
    const double na = op_norm(a);
    if (!(na > 1e-12)) continue;
    a *= 1.0 / na;

    const Hermitian c = random_density(rng, n);
    SdpProblem p;
    p.objective = trace_pairing(c, t.basis());
    p.blocks = {LmiBlock{-a, t.basis()}};
    const SdpSolution sol = solve(p, options.sdp);
    if (!sol.ok()) continue;  // nothing in T dominates a, or unbounded below
    const Hermitian b = combine(t.basis(), sol.x);
    if (!is_psd(b - a, options.psd_tol)) continue;

    auto inst = solve_unperforated_instance(s, t, a, b, options);
    if (inst.verdict == Verdict::Infeasible) return inst;
  }
  return std::nullopt;
}

Hermitian truncate_commuting(const Hermitian& a, const Hermitian& b) {
  if (a.dim() != b.dim()) throw InputError("truncate_commuting: dimension mismatch");
  const double na = op_norm(a), nb = op_norm(b);
  if (commutator_norm(a, b) > 1e-8 * (1 + na) * (1 + nb))
    throw InputError("truncate_commuting: a and b do not commute");
  if (!is_psd(b - a, 1e-9)) throw InputError("truncate_commuting: a is not below b");
  return clip_spectrum(b, na);
}

// ---------------------------------------------------------------------------
// Riesz interpolation

void InterpolationRequest::validate(double tol) const {
  const Index n = b.ambient_dim();
  if (n == 0) throw InputError("interpolation: empty algebra");
  if (a.dim() != n) throw InputError("interpolation: a has the wrong size");
  if (!(epsilon > 0)) throw InputError("interpolation: epsilon must be positive");
  if (length < 1) throw InputError("interpolation: sequence length must be positive");
  const auto check = [&](const std::vector<Hermitian>& list, const char* name, bool lower) {
    for (std::size_t i = 0; i < list.size(); ++i) {
      const auto& x = list[i];
      const std::string at = std::string(name) + "[" + std::to_string(i) + "]";
      if (x.dim() != n) throw InputError("interpolation: " + at + " has the wrong size");
      if (!b.contains(x, tol * scale_of({&x}))) throw InputError("interpolation: " + at + " not in B");
      if (!is_psd(lower ? Hermitian(a - x) : Hermitian(x - a), tol))
        throw InputError("interpolation: " + at + (lower ? " is not below a" : " is not above a"));
    }
  };
  check(lowers, "lowers", true);
  check(uppers, "uppers", false);
}

void add_extreme_bounds(InterpolationRequest& req, int k, std::uint64_t seed,
                        const SdpConfig& config) {
  if (k <= 0) return;
  if (!req.b.contains_identity()) throw InputError("extreme bounds need a unital algebra");
  const auto& basis = req.b.basis();
  const Index m = req.b.dim();
  const PreparedSdp upper({LmiBlock{-req.a, basis}}, m, 0.0, config);
  const PreparedSdp lower({LmiBlock{req.a, negated(basis)}}, m, 0.0, config);
  std::mt19937_64 rng(seed);
  for (int i = 0; i < k; ++i) {
    const VectorXd c = trace_pairing(random_density(rng, req.a.dim()), basis);
    const SdpSolution u = upper.minimize(c);
    if (!u.ok()) throw NumericalFailure(sdp_context("extreme upper bound", u));
    const SdpSolution l = lower.minimize(-c);
    if (!l.ok()) throw NumericalFailure(sdp_context("extreme lower bound", l));
    req.uppers.push_back(combine(basis, u.x));
    req.lowers.push_back(combine(basis, l.x));
  }
}

std::vector<LmiBlock> riesz_blocks(const InterpolationRequest& req, int n) {
  const Index d = req.a.dim();
  const auto& basis = req.b.basis();
  const auto neg = negated(basis);
  const Hermitian slack = scaled_identity(d, 1.0 / n);
  const double r = (1.0 + req.epsilon / n) * op_norm(req.a);
  std::vector<LmiBlock> blocks;
  for (const auto& l : req.lowers) blocks.push_back({slack - l, basis});
  for (const auto& u : req.uppers) blocks.push_back({u + slack, neg});
  blocks.push_back({scaled_identity(d, r), neg});
  blocks.push_back({scaled_identity(d, r), basis});
  return blocks;
}

std::vector<Hermitian> riesz_sequence(const InterpolationRequest& req, const SdpConfig& config) {
  req.validate();
  const Index d = req.a.dim();
  const double na = op_norm(req.a);
  std::vector<Hermitian> out;
  for (int n = 1; n <= req.length; ++n) {
    if (na == 0.0) {
      // The norm bound pins β to 0, which meets every ordering with slack 1/n.
      out.push_back(Hermitian::zero(d));
      continue;
    }
    const auto blocks = riesz_blocks(req, n);
    const SdpSolution sol = check_feasibility(blocks, 0.0, config);
    if (!sol.ok()) {
      std::ostringstream msg;
      msg << "riesz_sequence: no interpolant at n = " << n << " (" << to_string(sol.status);
      if (sol.dual_certificate) {
        const auto res = verify_certificate(blocks, *sol.dual_certificate);
        msg << ", certificate residual " << res.max_equality << ", constant " << res.constant;
      }
      msg << ")";
      throw NumericalFailure(msg.str());
    }
    const Hermitian beta = combine(req.b.basis(), sol.x);
    const double tol = 1e-7 * std::max(1.0, na);
    for (const auto& blk : blocks)
      if (lambda_min(blk.evaluate(sol.x)) < -tol)
        throw NumericalFailure("riesz_sequence: interpolant failed re-verification");
    out.push_back(beta);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Completely positive maps

MatrixXc apply_choi(const Hermitian& choi, Index dim_in, Index dim_out, const MatrixXc& x) {
  if (choi.dim() != dim_in * dim_out) throw InputError("Choi matrix has the wrong size");
  if (x.rows() != dim_in || x.cols() != dim_in) throw InputError("Choi map applied to wrong size");
  MatrixXc y = MatrixXc::Zero(dim_out, dim_out);
  for (Index i = 0; i < dim_in; ++i)
    for (Index j = 0; j < dim_in; ++j)
      if (x(i, j) != cplx(0.0))
        y += x(i, j) * choi.matrix().block(i * dim_out, j * dim_out, dim_out, dim_out);
  return y;
}

ChoiMap::ChoiMap(Index dim_in, Index dim_out, Hermitian choi, bool unital)
    : in_(dim_in), out_(dim_out), c_(std::move(choi)), unital_(unital) {
  if (in_ < 1 || out_ < 1) throw InputError("ChoiMap: dimensions must be positive");
  if (c_.dim() != in_ * out_)
    throw InputError("ChoiMap: Choi matrix must be " + std::to_string(in_ * out_) + "x" +
                     std::to_string(in_ * out_));
  if (lambda_min(c_) < -1e-8) throw InputError("ChoiMap: Choi matrix is not positive semidefinite");
  if (unital_) {
    const MatrixXc e = apply(MatrixXc::Identity(in_, in_)) - MatrixXc::Identity(out_, out_);
    if (e.cwiseAbs().maxCoeff() > 1e-8) throw InputError("ChoiMap: map is not unital");
  }
}

MatrixXc ChoiMap::apply(const MatrixXc& x) const { return apply_choi(c_, in_, out_, x); }

ChoiMap ChoiMap::identity(Index n) {
  MatrixXc c = MatrixXc::Zero(n * n, n * n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) c(i * n + i, j * n + j) = 1.0;
  return ChoiMap(n, n, Hermitian(c));
}

ChoiMap ChoiMap::diagonal_expectation(Index n) {
  MatrixXc c = MatrixXc::Zero(n * n, n * n);
  for (Index i = 0; i < n; ++i) c(i * n + i, i * n + i) = 1.0;
  return ChoiMap(n, n, Hermitian(c));
}

ChoiMap ChoiMap::from_kraus(const std::vector<MatrixXc>& kraus, bool unital) {
  if (kraus.empty()) throw InputError("from_kraus: no Kraus operators");
  const Index in = kraus.front().cols(), out = kraus.front().rows();
  MatrixXc c = MatrixXc::Zero(in * out, in * out);
  for (const auto& k : kraus) {
    if (k.rows() != out || k.cols() != in) throw InputError("from_kraus: inconsistent shapes");
    for (Index i = 0; i < in; ++i)
      for (Index j = 0; j < in; ++j)
        c.block(i * out, j * out, out, out) += k.col(i) * k.col(j).adjoint();
  }
  return ChoiMap(in, out, Hermitian(c), unital);
}

namespace {

// UCP maps M_n → M_n fixing S pointwise, as a spectrahedron of Choi matrices
// in hvec coordinates.
class FixedMapSet {
 public:
  FixedMapSet(const OperatorSubspace& s, const SdpConfig& config)
      : n_(s.ambient_dim()), basis_(canonical_hermitian_basis(n_ * n_)), sdp_(make(s, config)) {
    if (!sdp_.feasible()) throw NumericalFailure(sdp_context("UCP fixed set", sdp_.feasibility()));
  }

  Index n() const { return n_; }
  Index vars() const { return Index(basis_.size()); }

  // images[k] = Φ_k(x), Φ_k the map with Choi matrix equal to the k-th basis element.
  std::vector<MatrixXc> images(const MatrixXc& x) const { return images(basis_, n_, x); }

  SdpSolution minimize(const VectorXd& c) const {
    const SdpSolution sol = sdp_.minimize(c);
    if (!sol.ok()) throw NumericalFailure(sdp_context("UCP fixed set objective", sol));
    return sol;
  }

  Hermitian choi(const VectorXd& x) const { return hunvec(x, n_ * n_); }

 private:
  static std::vector<MatrixXc> images(const std::vector<Hermitian>& basis, Index n,
                                      const MatrixXc& x) {
    std::vector<MatrixXc> out;
    out.reserve(basis.size());
    for (const auto& h : basis) out.push_back(apply_choi(h, n, n, x));
    return out;
  }

  PreparedSdp make(const OperatorSubspace& s, const SdpConfig& config) const {
    const Index n = n_, m = Index(basis_.size());
    std::vector<Hermitian> fixed{Hermitian::identity(n)};
    for (const auto& b : s.basis()) fixed.push_back(b);
    MatrixXd eq(Index(fixed.size()) * n * n, m);
    VectorXd rhs(eq.rows());
    for (std::size_t f = 0; f < fixed.size(); ++f) {
      const auto im = images(basis_, n, fixed[f].matrix());
      for (Index k = 0; k < m; ++k) eq.block(Index(f) * n * n, k, n * n, 1) = hvec(im[std::size_t(k)]);
      rhs.segment(Index(f) * n * n, n * n) = hvec(fixed[f]);
    }
    return PreparedSdp({LmiBlock{Hermitian::zero(n * n), basis_}}, m, 0.0, config, eq, rhs);
  }

  Index n_;
  std::vector<Hermitian> basis_;
  PreparedSdp sdp_;
};

ChoiMap witness_map(const FixedMapSet& set, const VectorXd& x) {
  // The barrier point sits inside the face; clip rounding noise in the spectrum.
  Hermitian c = set.choi(x);
  if (lambda_min(c) < 0) c = apply_spectral(c, [](double v) { return std::max(v, 0.0); });
  return ChoiMap(set.n(), set.n(), std::move(c), false);
}

}  // namespace

FixedExtent ucp_fixed_extent(const OperatorSubspace& s, const SdpConfig& config) {
  return ucp_fixed_extent(s, full_matrix_algebra(s.ambient_dim()), config);
}

FixedExtent ucp_fixed_extent(const OperatorSubspace& s, const MatrixStarAlgebra& a,
                             const SdpConfig& config) {
  const Index n = s.ambient_dim();
  if (n > 4) throw InputError("ucp_fixed_extent: ambient dimension above 4");
  if (a.ambient_dim() != n) throw InputError("ucp_fixed_extent: dimension mismatch");
  for (const auto& b : s.basis())
    if (!a.contains(b, 1e-8)) throw InputError("ucp_fixed_extent: S not contained in A");

  const FixedMapSet set(s, config);
  FixedExtent out;
  out.element = a.basis().front();
  std::optional<VectorXd> best_x;
  for (const auto& ai : a.basis()) {
    const auto im = set.images(ai.matrix());
    for (Index p = 0; p < n; ++p)
      for (Index q = p; q < n; ++q)
        for (int part = 0; part < (p == q ? 1 : 2); ++part) {
          // Entry functional Re or Im of Φ(aᵢ)_pq, linear in the Choi coordinates.
          const auto pick = [&](const cplx& z) { return part == 0 ? z.real() : z.imag(); };
          VectorXd g(set.vars());
          for (Index k = 0; k < set.vars(); ++k) g(k) = pick(im[std::size_t(k)](p, q));
          const double base = pick(ai(p, q));
          for (double sign : {1.0, -1.0}) {
            const SdpSolution sol = set.minimize(-sign * g);
            ++out.sdp_count;
            const double dev = std::abs(g.dot(sol.x) - base);
            if (dev > out.max_deviation) {
              out.max_deviation = dev;
              out.element = ai;
              best_x = sol.x;
            }
          }
        }
  }
  if (best_x && out.max_deviation > 1e-6) out.witness = witness_map(set, *best_x);
  return out;
}

std::pair<double, double> ucp_functional_range(const OperatorSubspace& s, const Hermitian& rho,
                                               const Hermitian& t, const SdpConfig& config) {
  const Index n = s.ambient_dim();
  if (rho.dim() != n || t.dim() != n) throw InputError("ucp_functional_range: dimension mismatch");
  const FixedMapSet set(s, config);
  const auto im = set.images(t.matrix());
  VectorXd g(set.vars());
  for (Index k = 0; k < set.vars(); ++k)
    g(k) = std::real((rho.matrix() * im[std::size_t(k)]).trace());
  const double lo = g.dot(set.minimize(g).x);
  const double hi = g.dot(set.minimize(-g).x);
  return {std::min(lo, hi), std::max(lo, hi)};
}

double nosp_check(const std::vector<Hermitian>& pi_images, const ChoiMap& pi_map,
                  const MatrixStarAlgebra& a, const SdpConfig& config) {
  const Index d = a.dim(), n = a.ambient_dim();
  if (Index(pi_images.size()) != d)
    throw InputError("nosp_check: need one image per basis element of A");
  if (pi_map.dim_in() != n) throw InputError("nosp_check: Π has the wrong input size");
  const Index m = pi_map.dim_out();
  std::vector<Hermitian> diff, norm_plus, norm_minus;
  for (Index k = 0; k < d; ++k) {
    const auto& bk = a.basis()[std::size_t(k)];
    if (pi_images[std::size_t(k)].dim() != m) throw InputError("nosp_check: π and Π sizes differ");
    diff.push_back(pi_images[std::size_t(k)] - pi_map.apply(bk));
    norm_plus.push_back(bk);
    norm_minus.push_back(-bk);
  }
  // Variables (x, λ): Σ xₖ(π − Π)(bₖ) − λI ⪰ 0, I ± Σ xₖbₖ ⪰ 0.
  diff.push_back(-Hermitian::identity(m));
  norm_plus.push_back(Hermitian::zero(n));
  norm_minus.push_back(Hermitian::zero(n));
  SdpProblem p;
  p.objective = -VectorXd::Unit(d + 1, d);
  p.blocks = {LmiBlock{Hermitian::zero(m), diff}, LmiBlock{Hermitian::identity(n), norm_plus},
              LmiBlock{Hermitian::identity(n), norm_minus}};
  const SdpSolution sol = solve(p, config);
  if (!sol.ok()) throw NumericalFailure(sdp_context("nosp_check", sol));
  return -sol.value;
}

}  // namespace opsyslab
