#include "opsyslab/state_lab.hpp"

#include <algorithm>
#include <cmath>

namespace opsyslab {

namespace {

using Eigen::VectorXd;

// Nearest density to a near-PSD matrix of trace ≈ 1.
StateFunctional nearest_density(const Hermitian& z) {
  Hermitian p = apply_spectral(z, [](double x) { return std::max(x, 0.0); });
  const double tr = std::real(p.matrix().trace());
  if (!(tr > 0)) throw NumericalFailure("dual witness has no positive part");
  p *= 1.0 / tr;
  return StateFunctional(std::move(p));
}

std::string sdp_context(const char* what, const SdpSolution& s) {
  return std::string(what) + ": " + to_string(s.status) +
         (s.message.empty() ? "" : " (" + s.message + ")");
}

// Partition of eigenvalue indices into clusters of nearly equal values.
std::vector<std::vector<Index>> clusters(const VectorXd& ev, double tol) {
  std::vector<std::vector<Index>> out;
  for (Index i = 0; i < ev.size(); ++i) {
    if (out.empty() || ev(i) - ev(out.back().back()) > tol) out.emplace_back();
    out.back().push_back(i);
  }
  return out;
}

// Splits a projection e ∈ A into minimal projections of A.
void split_minimal(const MatrixXc& v, const MatrixStarAlgebra& a, std::vector<MatrixXc>& out) {
  const Index r = v.cols();
  if (r == 1) {
    out.push_back(v);
    return;
  }
  for (const auto& b : a.basis()) {
    // Compression of b to range(e); e b e ∝ e iff this is scalar.
    MatrixXc c = v.adjoint() * b.matrix() * v;
    c = (c + c.adjoint()).eval() / 2.0;
    const cplx mean = c.trace() / double(r);
    if ((c - mean * MatrixXc::Identity(r, r)).norm() <= 1e-8) continue;
    const auto d = eigh(Hermitian(c));
    for (const auto& cl : clusters(d.eigenvalues, 1e-8)) {
      MatrixXc w(r, Index(cl.size()));
      for (std::size_t k = 0; k < cl.size(); ++k) w.col(Index(k)) = d.eigenvectors.col(cl[k]);
      split_minimal(MatrixXc(v * w), a, out);
    }
    return;
  }
  out.push_back(v);
}

}  // namespace

Hermitian PureDecomposition::reconstruct() const {
  if (atoms.empty()) throw InputError("empty decomposition");
  Hermitian sum = Hermitian::zero(atoms.front().state.ambient_dim());
  for (const auto& at : atoms) sum += at.weight * at.state.density();
  return sum;
}

Eigen::VectorXd functional_values(const StateFunctional& phi, const OperatorSubspace& s) {
  if (phi.ambient_dim() != s.ambient_dim())
    throw InputError("state and subspace live in different matrix sizes");
  VectorXd v(s.dim());
  for (Index i = 0; i < s.dim(); ++i) v(i) = phi(s.basis()[std::size_t(i)]);
  return v;
}

bool verify_state_on_subspace(const Eigen::VectorXd& values, const OperatorSubspace& s,
                              const SdpConfig& config) {
  if (!s.unital()) throw InputError("verify_state_on_subspace: subspace must contain I");
  if (values.size() != s.dim())
    throw InputError("verify_state_on_subspace: expected " + std::to_string(s.dim()) +
                     " values, got " + std::to_string(values.size()));
  const Index n = s.ambient_dim();
  const VectorXd id = s.coordinates(Hermitian::identity(n));
  if (std::abs(id.dot(values) - 1.0) > 1e-9) return false;

  SdpProblem p;
  p.objective = values;
  p.blocks = {LmiBlock{Hermitian::zero(n), s.basis()}};
  p.eq_matrix.resize(1, s.dim());
  for (Index i = 0; i < s.dim(); ++i)
    p.eq_matrix(0, i) = std::real(s.basis()[std::size_t(i)].matrix().trace());
  p.eq_rhs = VectorXd::Ones(1);
  const SdpSolution sol = solve(p, config);
  if (!sol.ok()) throw NumericalFailure(sdp_context("state verification", sol));
  return sol.value >= -1e-8;
}

namespace {

// E(φ, M_n): densities Z with tr(Z sᵢ) = φᵢ, in hvec coordinates. Every
// state on the ambient algebra is the restriction of such a Z.
class ExtensionSet {
 public:
  ExtensionSet(const Eigen::VectorXd& values, const OperatorSubspace& s,
               const MatrixStarAlgebra& ambient, const SdpConfig& config)
      : n_(s.ambient_dim()), ambient_(ambient), sdp_(make(values, s, config)) {
    if (!sdp_.feasible()) {
      if (sdp_.feasibility().status == SdpStatus::Infeasible)
        throw InputError("functional is not a state on the subspace (no positive extension)");
      throw NumericalFailure(sdp_context("extension set", sdp_.feasibility()));
    }
  }

  ExtensionInterval interval(const Hermitian& t) const {
    if (t.dim() != n_) throw InputError("extension_interval: dimension mismatch");
    if (!ambient_.contains(t, 1e-8))
      throw InputError("extension_interval: element not in ambient algebra");
    const VectorXd c = hvec(t);
    ExtensionInterval out;
    out.element = t;
    const SdpSolution hi = sdp_.minimize(-c);
    if (!hi.ok()) throw NumericalFailure(sdp_context("extension interval (max)", hi));
    const SdpSolution lo = sdp_.minimize(c);
    if (!lo.ok()) throw NumericalFailure(sdp_context("extension interval (min)", lo));
    out.max_witness = to_state(hi.x);
    out.min_witness = to_state(lo.x);
    out.max = out.max_witness(t);
    out.min = out.min_witness(t);
    if (out.min > out.max) out.min = out.max = 0.5 * (out.min + out.max);
    return out;
  }

 private:
  static PreparedSdp make(const Eigen::VectorXd& values, const OperatorSubspace& s,
                          const SdpConfig& config) {
    const Index n = s.ambient_dim();
    Eigen::MatrixXd eq(s.dim(), n * n);
    for (Index i = 0; i < s.dim(); ++i) eq.row(i) = hvec(s.basis()[std::size_t(i)]).transpose();
    return PreparedSdp({LmiBlock{Hermitian::zero(n), canonical_hermitian_basis(n)}}, n * n, 0.0,
                       config, eq, values);
  }

  StateFunctional to_state(const VectorXd& z) const { return nearest_density(hunvec(z, n_)); }

  Index n_;
  const MatrixStarAlgebra& ambient_;
  PreparedSdp sdp_;
};

void check_inputs(const Eigen::VectorXd& values, const OperatorSubspace& s,
                  const MatrixStarAlgebra& ambient) {
  if (!s.unital()) throw InputError("extension_interval: subspace must contain I");
  if (values.size() != s.dim()) throw InputError("extension_interval: value count mismatch");
  if (ambient.ambient_dim() != s.ambient_dim())
    throw InputError("extension_interval: dimension mismatch");
  for (const auto& b : s.basis())
    if (!ambient.contains(b, 1e-8))
      throw InputError("extension_interval: subspace not contained in ambient algebra");
}

}  // namespace

ExtensionInterval extension_interval(const Eigen::VectorXd& values, const OperatorSubspace& s,
                                     const Hermitian& t, const MatrixStarAlgebra& ambient,
                                     const SdpConfig& config) {
  check_inputs(values, s, ambient);
  return ExtensionSet(values, s, ambient, config).interval(t);
}

ExtensionInterval extension_interval(const StateFunctional& phi, const OperatorSubspace& s,
                                     const Hermitian& t, const MatrixStarAlgebra& ambient,
                                     const SdpConfig& config) {
  return extension_interval(functional_values(phi, s), s, t, ambient, config);
}

UepResult has_uep(const StateFunctional& psi, const OperatorSubspace& s,
                  const MatrixStarAlgebra& a, const SdpConfig& config) {
  const VectorXd values = functional_values(psi, s);
  check_inputs(values, s, a);
  const ExtensionSet set(values, s, a, config);
  UepResult out;
  for (const auto& t : a.basis()) {
    out.intervals.push_back(set.interval(t));
    if (out.has_uep && out.intervals.back().length() > kUepTol) {
      out.has_uep = false;
      out.witness = out.intervals.back();
    }
  }
  return out;
}

bool is_pure(const StateFunctional& phi, const MatrixStarAlgebra& a) {
  const GnsData g = gns(phi, a);
  std::vector<Hermitian> image;
  image.reserve(g.rep.size());
  for (const auto& r : g.rep) image.push_back(Hermitian(MatrixXc((r + r.adjoint()) / 2.0)));
  return commutant_dimension(image) == 1;
}

PureDecomposition pure_decomposition(const StateFunctional& phi, const MatrixStarAlgebra& a) {
  if (phi.ambient_dim() != a.ambient_dim())
    throw InputError("pure_decomposition: state and algebra live in different matrix sizes");
  if (!a.contains_identity()) throw InputError("pure_decomposition: algebra must contain I");
  // Trace-preserving conditional expectation onto A keeps the functional on A.
  const Hermitian xa = a.project(phi.density());
  const auto d = eigh(xa);
  PureDecomposition out;
  for (const auto& cl : clusters(d.eigenvalues, 1e-9)) {
    double lam = 0.0;
    for (Index i : cl) lam += d.eigenvalues(i);
    lam /= double(cl.size());
    if (lam <= 1e-12) continue;
    MatrixXc v(xa.dim(), Index(cl.size()));
    for (std::size_t k = 0; k < cl.size(); ++k) v.col(Index(k)) = d.eigenvectors.col(cl[k]);
    std::vector<MatrixXc> mins;
    split_minimal(v, a, mins);
    for (const auto& w : mins) {
      const MatrixXc e = w * w.adjoint();
      const double rank = double(w.cols());
      out.atoms.push_back({lam * rank, StateFunctional(Hermitian(MatrixXc(e / rank)))});
    }
  }
  double total = 0.0;
  for (const auto& at : out.atoms) total += at.weight;
  if (!(total > 0)) throw NumericalFailure("pure_decomposition: no positive weight");
  for (auto& at : out.atoms) at.weight /= total;
  return out;
}

MajorizingResult find_pure_majorizing_state(const StateFunctional& theta, const Hermitian& a,
                                            const MatrixStarAlgebra& b,
                                            const MatrixStarAlgebra& ambient, bool verify_uep,
                                            const SdpConfig& config) {
  if (!ambient.contains(a, 1e-8)) throw InputError("find_pure_majorizing_state: a not in A");
  for (const auto& x : b.basis())
    if (!ambient.contains(x, 1e-8)) throw InputError("find_pure_majorizing_state: B not in A");
  const OperatorSubspace bs = b.as_subspace();
  if (verify_uep && !has_uep(theta, bs, ambient, config).has_uep)
    throw InputError("find_pure_majorizing_state: θ lacks the UEP relative to B");

  MajorizingResult out;
  out.target = theta(a);
  out.decomposition = pure_decomposition(theta, b);
  double best = -1.0;
  for (std::size_t i = 0; i < out.decomposition.atoms.size(); ++i) {
    const auto iv = extension_interval(out.decomposition.atoms[i].state, bs, a, ambient, config);
    for (const auto* w : {&iv.max_witness, &iv.min_witness}) {
      const double v = (*w)(a);
      if (std::abs(v) > best) {
        best = std::abs(v);
        out.state = *w;
        out.atom = i;
        out.value = v;
      }
    }
  }
  out.found = best >= std::abs(out.target) - kUepTol;
  return out;
}

}  // namespace opsyslab
