#include "opsyslab/star_algebra.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace opsyslab {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Gram-Schmidt step against orthonormal columns q (twice, for stability).
// Appends the normalized remainder and returns true if it is not negligible.
bool try_append(MatrixXd& q, const VectorXd& v, double tol) {
  VectorXd r = v;
  for (int pass = 0; pass < 2; ++pass)
    if (q.cols() > 0) r -= q * (q.transpose() * r);
  const double nr = r.norm();
  if (nr <= tol * std::max(1.0, v.norm())) return false;
  q.conservativeResize(v.size(), q.cols() + 1);
  q.col(q.cols() - 1) = r / nr;
  return true;
}

// Sign convention: first entry of magnitude > 1e-12 is positive.
void fix_sign(VectorXd& v) {
  for (Index i = 0; i < v.size(); ++i)
    if (std::abs(v(i)) > 1e-12) {
      if (v(i) < 0) v = -v;
      return;
    }
}

std::vector<Hermitian> unvec_columns(const MatrixXd& q, Index n) {
  std::vector<Hermitian> out;
  out.reserve(std::size_t(q.cols()));
  for (Index j = 0; j < q.cols(); ++j) out.push_back(hunvec(q.col(j), n));
  return out;
}

Hermitian jordan(const MatrixXc& a, const MatrixXc& b) {
  const MatrixXc ab = a * b;
  return Hermitian(MatrixXc((ab + ab.adjoint()) / 2.0));
}

// i(ab − ba)/2 for hermitian a, b.
Hermitian commutator_part(const MatrixXc& a, const MatrixXc& b) {
  const MatrixXc ab = a * b;
  return Hermitian(MatrixXc(cplx(0, 0.5) * (ab - ab.adjoint())));
}

// Null space of a PSD Gram matrix at relative threshold kRankTol.
MatrixXd gram_null_space(const MatrixXd& g) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(g);
  const VectorXd& ev = es.eigenvalues();
  const double top = std::max(1.0, ev.cwiseAbs().maxCoeff());
  Index k = 0;
  while (k < ev.size() && ev(k) <= kRankTol * top) ++k;
  MatrixXd null = es.eigenvectors().leftCols(k);
  // Orthonormal already; give it a reproducible orientation.
  for (Index j = 0; j < null.cols(); ++j) {
    VectorXd c = null.col(j);
    fix_sign(c);
    null.col(j) = c;
  }
  return null;
}

// Real matrix of X ↦ hvec(i[X, B]) acting on hvec coordinates.
MatrixXd ad_matrix(const MatrixXc& b, const std::vector<Hermitian>& domain) {
  const Index n = b.rows();
  MatrixXd out(n * n, Index(domain.size()));
  for (std::size_t m = 0; m < domain.size(); ++m) {
    const MatrixXc& x = domain[m].matrix();
    out.col(Index(m)) = hvec(MatrixXc(cplx(0, 1) * (x * b - b * x)));
  }
  return out;
}

bool has_identity(const MatrixXd& q, Index n) {
  const VectorXd id = hvec(MatrixXc(MatrixXc::Identity(n, n)));
  const VectorXd r = id - q * (q.transpose() * id);
  return r.norm() <= kRankTol * std::sqrt(double(n));
}

}  // namespace

// ---------------------------------------------------------------------------

OperatorSubspace::OperatorSubspace(std::vector<Hermitian> basis) : basis_(std::move(basis)) {
  if (basis_.empty()) throw InputError("operator subspace needs at least one basis element");
  n_ = basis_.front().dim();
  if (n_ == 0) throw InputError("operator subspace basis element is empty");
  for (const auto& b : basis_)
    if (b.dim() != n_) throw InputError("operator subspace basis has inconsistent dimensions");
  hv_.resize(n_ * n_, dim());
  for (Index j = 0; j < dim(); ++j) hv_.col(j) = hvec(basis_[std::size_t(j)]);
  const MatrixXd gram = hv_.transpose() * hv_;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(gram);
  if (es.eigenvalues()(0) <= kRankTol * std::max(1e-300, es.eigenvalues().maxCoeff()))
    throw InputError("operator subspace basis is linearly dependent");
  Eigen::HouseholderQR<MatrixXd> qr(hv_);
  q_ = qr.householderQ() * MatrixXd::Identity(n_ * n_, dim());
  ortho_ = unvec_columns(q_, n_);
  unital_ = has_identity(q_, n_);
}

Eigen::VectorXd OperatorSubspace::coordinates(const Hermitian& h) const {
  if (h.dim() != n_) throw InputError("element has the wrong dimension for this subspace");
  return hv_.colPivHouseholderQr().solve(hvec(h));
}

double OperatorSubspace::residual(const Hermitian& h) const {
  if (h.dim() != n_) throw InputError("element has the wrong dimension for this subspace");
  const VectorXd v = hvec(h);
  return (v - q_ * (q_.transpose() * v)).norm();
}

bool OperatorSubspace::contains(const Hermitian& h, double tol) const {
  return residual(h) <= tol * std::max(1.0, h.matrix().norm());
}

// ---------------------------------------------------------------------------

bool MatrixStarAlgebra::contains(const Hermitian& h, double tol) const {
  if (h.dim() != n_) throw InputError("element has the wrong dimension for this algebra");
  const VectorXd v = hvec(h);
  return (v - q_ * (q_.transpose() * v)).norm() <= tol * std::max(1.0, v.norm());
}

Eigen::VectorXcd MatrixStarAlgebra::coordinates(const MatrixXc& y) const {
  if (y.rows() != n_ || y.cols() != n_)
    throw InputError("element has the wrong dimension for this algebra");
  Eigen::VectorXcd out(dim());
  for (Index k = 0; k < dim(); ++k) out(k) = (basis_[std::size_t(k)].matrix() * y).trace();
  return out;
}

Hermitian MatrixStarAlgebra::project(const Hermitian& h) const {
  if (h.dim() != n_) throw InputError("element has the wrong dimension for this algebra");
  return hunvec(q_ * (q_.transpose() * hvec(h)), n_);
}

double MatrixStarAlgebra::closure_residual() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < basis_.size(); ++i)
    for (std::size_t j = i; j < basis_.size(); ++j) {
      for (const Hermitian& p : {jordan(basis_[i].matrix(), basis_[j].matrix()),
                                 commutator_part(basis_[i].matrix(), basis_[j].matrix())}) {
        const VectorXd v = hvec(p);
        worst = std::max(worst, (v - q_ * (q_.transpose() * v)).norm());
      }
    }
  return worst;
}

MatrixStarAlgebra algebra_from_orthonormal(std::vector<Hermitian> basis) {
  if (basis.empty()) throw InputError("algebra needs at least one basis element");
  MatrixStarAlgebra a;
  a.n_ = basis.front().dim();
  a.q_.resize(a.n_ * a.n_, Index(basis.size()));
  for (std::size_t j = 0; j < basis.size(); ++j) {
    if (basis[j].dim() != a.n_) throw InputError("algebra basis has inconsistent dimensions");
    a.q_.col(Index(j)) = hvec(basis[j]);
  }
  const MatrixXd gram = a.q_.transpose() * a.q_;
  if ((gram - MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff() > 1e-8)
    throw InputError("algebra basis is not orthonormal");
  a.basis_ = std::move(basis);
  a.unit_ = has_identity(a.q_, a.n_);
  return a;
}

MatrixStarAlgebra full_matrix_algebra(Index n) {
  if (n <= 0) throw InputError("matrix algebra dimension must be positive");
  return algebra_from_orthonormal(canonical_hermitian_basis(n));
}

MatrixStarAlgebra diagonal_algebra(Index n) {
  if (n <= 0) throw InputError("matrix algebra dimension must be positive");
  std::vector<Hermitian> b;
  for (Index i = 0; i < n; ++i) b.push_back(hunvec(VectorXd::Unit(n * n, i), n));
  return algebra_from_orthonormal(std::move(b));
}

MatrixStarAlgebra generate_algebra(const OperatorSubspace& gen, bool add_identity) {
  const Index n = gen.ambient_dim();
  if (n <= 0) throw InputError("generate_algebra: empty subspace");
  if (n > kMaxAlgebraDim)
    throw InputError("generate_algebra: ambient dimension above " + std::to_string(kMaxAlgebraDim));
  const Index full = n * n;
  MatrixXd q(full, 0);
  if (add_identity) try_append(q, hvec(MatrixXc(MatrixXc::Identity(n, n))), kRankTol);
  for (const auto& b : gen.basis()) try_append(q, hvec(b), kRankTol);

  Index done = 0;  // elements [0, done) already multiplied with each other
  for (int guard = 0; guard < int(full) + 2 && q.cols() < full; ++guard) {
    const Index before = q.cols();
    if (done == before) break;
    const std::vector<Hermitian> cur = unvec_columns(q, n);
    for (Index i = 0; i < before && q.cols() < full; ++i)
      for (Index j = std::max(i, done); j < before && q.cols() < full; ++j) {
        const MatrixXc& a = cur[std::size_t(i)].matrix();
        const MatrixXc& b = cur[std::size_t(j)].matrix();
        try_append(q, hvec(jordan(a, b)), kRankTol);
        try_append(q, hvec(commutator_part(a, b)), kRankTol);
      }
    done = before;
  }
  if (q.cols() == full) return full_matrix_algebra(n);
  return algebra_from_orthonormal(unvec_columns(q, n));
}

MatrixStarAlgebra commutant(const MatrixStarAlgebra& a) {
  const Index n = a.ambient_dim();
  if (n <= 0) throw InputError("commutant of an empty algebra");
  const auto domain = canonical_hermitian_basis(n);
  MatrixXd g = MatrixXd::Zero(n * n, n * n);
  for (const auto& b : a.basis()) {
    const MatrixXd l = ad_matrix(b.matrix(), domain);
    g.noalias() += l.transpose() * l;
  }
  const MatrixXd null = gram_null_space(g);
  if (null.cols() == n * n) return full_matrix_algebra(n);
  // Canonical coordinates are orthonormal, so the null vectors are too.
  return algebra_from_orthonormal(unvec_columns(null, n));
}

MatrixStarAlgebra center(const MatrixStarAlgebra& a) {
  const Index d = a.dim();
  MatrixXd g = MatrixXd::Zero(d, d);
  for (const auto& b : a.basis()) {
    const MatrixXd l = ad_matrix(b.matrix(), a.basis());
    g.noalias() += l.transpose() * l;
  }
  const MatrixXd null = gram_null_space(g);
  MatrixXd q = a.q_ * null;
  std::vector<Hermitian> basis = unvec_columns(q, a.ambient_dim());
  return algebra_from_orthonormal(std::move(basis));
}

Index commutant_dimension(const std::vector<Hermitian>& family) {
  if (family.empty()) throw InputError("commutant_dimension: empty family");
  const Index n = family.front().dim();
  const auto domain = canonical_hermitian_basis(n);
  MatrixXd g = MatrixXd::Zero(n * n, n * n);
  for (const auto& b : family) {
    if (b.dim() != n) throw InputError("commutant_dimension: inconsistent dimensions");
    const MatrixXd l = ad_matrix(b.matrix(), domain);
    g.noalias() += l.transpose() * l;
  }
  return gram_null_space(g).cols();
}

// ---------------------------------------------------------------------------

MatrixXc GnsData::represent(const MatrixXc& y, const MatrixStarAlgebra& a) const {
  const Eigen::VectorXcd alpha = a.coordinates(y);
  MatrixXc out = MatrixXc::Zero(rep_dim, rep_dim);
  for (Index k = 0; k < alpha.size(); ++k) out += alpha(k) * rep[std::size_t(k)];
  return out;
}

GnsData gns(const StateFunctional& phi, const MatrixStarAlgebra& a) {
  if (phi.ambient_dim() != a.ambient_dim())
    throw InputError("gns: state and algebra live in different matrix sizes");
  if (!a.contains_identity()) throw InputError("gns: algebra must contain the identity");
  const Index d = a.dim();
  const auto& b = a.basis();
  const MatrixXc& x = phi.density().matrix();

  GnsData out;
  out.gram.resize(d, d);
  for (Index j = 0; j < d; ++j)
    for (Index i = 0; i < d; ++i)
      out.gram(j, i) = (b[std::size_t(j)].matrix() * b[std::size_t(i)].matrix() * x).trace();
  out.gram = (out.gram + out.gram.adjoint()).eval() / 2.0;

  Eigen::SelfAdjointEigenSolver<MatrixXc> es(out.gram);
  const VectorXd& ev = es.eigenvalues();
  const double top = std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
  if (ev(0) < -kRankTol * std::max(1.0, top))
    throw InputError("gns: functional is not positive on the algebra");
  std::vector<Index> keep;
  for (Index i = d - 1; i >= 0; --i)
    if (ev(i) > kRankTol * top) keep.push_back(i);
  const Index r = Index(keep.size());
  out.rep_dim = r;
  MatrixXc p(r, d), pinv(d, r);
  for (Index k = 0; k < r; ++k) {
    const double s = std::sqrt(ev(keep[std::size_t(k)]));
    const auto u = es.eigenvectors().col(keep[std::size_t(k)]);
    p.row(k) = s * u.adjoint();
    pinv.col(k) = u / s;
  }
  out.embedding = p;

  out.rep.reserve(std::size_t(d));
  for (Index k = 0; k < d; ++k) {
    MatrixXc m(d, d);
    for (Index i = 0; i < d; ++i)
      m.col(i) = a.coordinates(MatrixXc(b[std::size_t(k)].matrix() * b[std::size_t(i)].matrix()));
    out.rep.push_back(p * m * pinv);
  }
  out.cyclic_vector = p * a.coordinates(MatrixXc::Identity(a.ambient_dim(), a.ambient_dim()));
  return out;
}

}  // namespace opsyslab
