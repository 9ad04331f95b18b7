#pragma once

// Dense hermitian linear algebra templated on the scalar type (double or
// std::complex<double>). Everything here is header-only and deterministic.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <string>
#include <vector>

#include "opsyslab/errors.hpp"

namespace opsyslab {

using cplx = std::complex<double>;
using Index = Eigen::Index;

template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using MatrixXc = DenseMatrix<cplx>;

inline constexpr Index kMaxEigenDim = 64;
inline constexpr double kHermitianRejectTol = 1e-8;

namespace detail {

template <typename Scalar>
double max_abs(const DenseMatrix<Scalar>& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

template <typename Scalar>
bool all_finite(const DenseMatrix<Scalar>& m) {
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i) {
      const Scalar v = m(i, j);
      if (!std::isfinite(std::real(v)) || !std::isfinite(std::imag(v))) return false;
    }
  return true;
}

// Forces exact hermitian structure on an almost-hermitian matrix.
template <typename Scalar>
void make_exactly_hermitian(DenseMatrix<Scalar>& m) {
  const Index n = m.rows();
  for (Index i = 0; i < n; ++i) {
    m(i, i) = Scalar(std::real(m(i, i)));
    for (Index j = i + 1; j < n; ++j) {
      const Scalar avg = (m(i, j) + Eigen::numext::conj(m(j, i))) / 2.0;
      m(i, j) = avg;
      m(j, i) = Eigen::numext::conj(avg);
    }
  }
}

}  // namespace detail

/// A dense hermitian matrix. Construction symmetrizes (A + A*)/2 and rejects
/// inputs whose skew part exceeds 1e-8 relative to the largest entry, or that
/// contain NaN/Inf. After construction the storage is exactly hermitian.
template <typename Scalar>
class HermitianMatrix {
 public:
  using MatrixType = DenseMatrix<Scalar>;

  /// Empty placeholder (dimension 0); not accepted by any operation.
  HermitianMatrix() = default;

  explicit HermitianMatrix(MatrixType m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols())
      throw InputError("hermitian matrix must be square, got " + std::to_string(m_.rows()) +
                       "x" + std::to_string(m_.cols()));
    if (m_.rows() == 0) throw InputError("hermitian matrix must have positive dimension");
    if (!detail::all_finite(m_)) throw InputError("matrix contains NaN or Inf entries");
    const double skew = detail::max_abs<Scalar>(m_ - m_.adjoint());
    if (skew > kHermitianRejectTol * std::max(1.0, detail::max_abs(m_)))
      throw InputError("matrix is not hermitian (skew part " + std::to_string(skew) + ")");
    detail::make_exactly_hermitian(m_);
  }

  static HermitianMatrix zero(Index n) { return HermitianMatrix(MatrixType::Zero(n, n)); }
  static HermitianMatrix identity(Index n) { return HermitianMatrix(MatrixType::Identity(n, n)); }
  /// Diagonal matrix from real entries.
  static HermitianMatrix diagonal(const std::vector<double>& d) {
    MatrixType m = MatrixType::Zero(Index(d.size()), Index(d.size()));
    for (std::size_t i = 0; i < d.size(); ++i) m(Index(i), Index(i)) = Scalar(d[i]);
    return HermitianMatrix(std::move(m));
  }

  Index dim() const { return m_.rows(); }
  bool empty() const { return m_.size() == 0; }
  const MatrixType& matrix() const { return m_; }
  Scalar operator()(Index i, Index j) const { return m_(i, j); }

  HermitianMatrix& operator+=(const HermitianMatrix& o) {
    check_same_dim(o);
    m_ += o.m_;
    return *this;
  }
  HermitianMatrix& operator-=(const HermitianMatrix& o) {
    check_same_dim(o);
    m_ -= o.m_;
    return *this;
  }
  HermitianMatrix& operator*=(double s) {
    m_ *= s;
    return *this;
  }

  friend HermitianMatrix operator+(HermitianMatrix a, const HermitianMatrix& b) { return a += b; }
  friend HermitianMatrix operator-(HermitianMatrix a, const HermitianMatrix& b) { return a -= b; }
  friend HermitianMatrix operator-(HermitianMatrix a) { return a *= -1.0; }
  friend HermitianMatrix operator*(double s, HermitianMatrix a) { return a *= s; }
  friend HermitianMatrix operator*(HermitianMatrix a, double s) { return a *= s; }

  friend bool operator==(const HermitianMatrix& a, const HermitianMatrix& b) {
    return a.m_.rows() == b.m_.rows() && a.m_.cols() == b.m_.cols() && a.m_ == b.m_;
  }

 private:
  void check_same_dim(const HermitianMatrix& o) const {
    if (o.dim() != dim())
      throw InputError("dimension mismatch: " + std::to_string(dim()) + " vs " +
                       std::to_string(o.dim()));
  }

  MatrixType m_;
};

using Hermitian = HermitianMatrix<cplx>;
using SymmetricMatrix = HermitianMatrix<double>;

template <typename Scalar>
struct EigenDecomposition {
  Eigen::VectorXd eigenvalues;       // ascending
  DenseMatrix<Scalar> eigenvectors;  // unitary, columns match eigenvalues

  DenseMatrix<Scalar> reconstruct() const {
    return eigenvectors * eigenvalues.template cast<Scalar>().asDiagonal() *
           eigenvectors.adjoint();
  }
};

/// Cyclic Jacobi eigensolver. Complex off-diagonal entries are first rotated
/// to the real axis by a diagonal phase, then annihilated by a real plane
/// rotation; the sweep order is fixed, so results are bitwise reproducible.
template <typename Scalar>
EigenDecomposition<Scalar> eigh(const HermitianMatrix<Scalar>& a) {
  using Eigen::numext::conj;
  const Index n = a.dim();
  if (n == 0) throw InputError("eigh: dimension 0");
  if (n > kMaxEigenDim)
    throw InputError("eigh: dimension " + std::to_string(n) + " exceeds " +
                     std::to_string(kMaxEigenDim));

  DenseMatrix<Scalar> m = a.matrix();
  DenseMatrix<Scalar> v = DenseMatrix<Scalar>::Identity(n, n);
  const double scale = m.norm();

  auto off_norm_sq = [&] {
    double s = 0.0;
    for (Index q = 1; q < n; ++q)
      for (Index p = 0; p < q; ++p) s += std::norm(m(p, q));
    return s;
  };

  constexpr int kMaxSweeps = 80;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    const double off = off_norm_sq();
    if (off == 0.0 || std::sqrt(off) <= 1e-16 * scale) break;
    for (Index p = 0; p < n - 1; ++p) {
      for (Index q = p + 1; q < n; ++q) {
        const Scalar apq = m(p, q);
        const double r = std::abs(apq);
        if (r == 0.0 || r <= 1e-300) continue;
        const double app = std::real(m(p, p));
        const double aqq = std::real(m(q, q));
        // Entry negligible against both diagonal entries: zero it outright.
        if (sweep > 3 && r < 1e-18 * (std::abs(app) + std::abs(aqq))) {
          m(p, q) = m(q, p) = Scalar(0);
          continue;
        }
        const Scalar phase = apq / r;
        const double theta = (aqq - app) / (2.0 * r);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        // Two-by-two block of the unitary acting on columns p and q.
        const Scalar r00 = Scalar(c), r01 = Scalar(s);
        const Scalar r10 = -s * conj(phase), r11 = c * conj(phase);

        for (Index k = 0; k < n; ++k) {
          const Scalar mp = m(k, p), mq = m(k, q);
          m(k, p) = mp * r00 + mq * r10;
          m(k, q) = mp * r01 + mq * r11;
        }
        for (Index k = 0; k < n; ++k) {
          const Scalar mp = m(p, k), mq = m(q, k);
          m(p, k) = conj(r00) * mp + conj(r10) * mq;
          m(q, k) = conj(r01) * mp + conj(r11) * mq;
        }
        for (Index k = 0; k < n; ++k) {
          const Scalar vp = v(k, p), vq = v(k, q);
          v(k, p) = vp * r00 + vq * r10;
          v(k, q) = vp * r01 + vq * r11;
        }
        m(p, q) = m(q, p) = Scalar(0);
        m(p, p) = Scalar(std::real(m(p, p)));
        m(q, q) = Scalar(std::real(m(q, q)));
      }
    }
  }

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index(0));
  std::stable_sort(order.begin(), order.end(), [&](Index i, Index j) {
    return std::real(m(i, i)) < std::real(m(j, j));
  });

  EigenDecomposition<Scalar> out;
  out.eigenvalues.resize(n);
  out.eigenvectors.resize(n, n);
  for (Index k = 0; k < n; ++k) {
    out.eigenvalues(k) = std::real(m(order[std::size_t(k)], order[std::size_t(k)]));
    out.eigenvectors.col(k) = v.col(order[std::size_t(k)]);
  }
  return out;
}

template <typename Scalar>
double lambda_min(const HermitianMatrix<Scalar>& a) {
  return eigh(a).eigenvalues(0);
}

template <typename Scalar>
double lambda_max(const HermitianMatrix<Scalar>& a) {
  const auto e = eigh(a);
  return e.eigenvalues(e.eigenvalues.size() - 1);
}

/// Operator norm: largest absolute eigenvalue.
template <typename Scalar>
double op_norm(const HermitianMatrix<Scalar>& a) {
  const auto e = eigh(a);
  return std::max(std::abs(e.eigenvalues(0)), std::abs(e.eigenvalues(e.eigenvalues.size() - 1)));
}

/// A ⪰ 0 in the relative sense λ_min(A) ≥ −tol·(1 + ‖A‖).
template <typename Scalar>
bool is_psd(const HermitianMatrix<Scalar>& a, double tol) {
  if (tol < 0) throw InputError("is_psd: tolerance must be nonnegative");
  const auto e = eigh(a);
  const double lo = e.eigenvalues(0);
  const double norm = std::max(std::abs(lo), std::abs(e.eigenvalues(e.eigenvalues.size() - 1)));
  return lo >= -tol * (1.0 + norm);
}

/// Hilbert-Schmidt pairing trace(A* B).
template <typename Derived1, typename Derived2>
typename Derived1::Scalar hs_inner(const Eigen::MatrixBase<Derived1>& a,
                                   const Eigen::MatrixBase<Derived2>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw InputError("hs_inner: dimension mismatch");
  return (a.adjoint() * b).trace();
}

template <typename Scalar>
Scalar hs_inner(const HermitianMatrix<Scalar>& a, const HermitianMatrix<Scalar>& b) {
  return hs_inner(a.matrix(), b.matrix());
}

/// Real part of trace(A B) for hermitian A, B; the real inner product on the
/// space of hermitian matrices.
template <typename Scalar>
double real_inner(const HermitianMatrix<Scalar>& a, const HermitianMatrix<Scalar>& b) {
  return std::real(hs_inner(a, b));
}

/// f(A) by functional calculus for a real function f.
template <typename Scalar, typename F>
HermitianMatrix<Scalar> apply_spectral(const HermitianMatrix<Scalar>& a, F&& f) {
  const auto e = eigh(a);
  Eigen::VectorXd fv = e.eigenvalues.unaryExpr([&](double x) { return double(f(x)); });
  return HermitianMatrix<Scalar>(e.eigenvectors * fv.template cast<Scalar>().asDiagonal() *
                                 e.eigenvectors.adjoint());
}

/// Clips the spectrum of b to [−r, r].
template <typename Scalar>
HermitianMatrix<Scalar> clip_spectrum(const HermitianMatrix<Scalar>& b, double r) {
  if (!(r >= 0)) throw InputError("clip_spectrum: threshold must be nonnegative");
  if (op_norm(b) <= r) return b;
  return apply_spectral(b, [r](double x) { return std::clamp(x, -r, r); });
}

/// Operator norm of the commutator [a, b] = ab − ba.
template <typename Scalar>
double commutator_norm(const HermitianMatrix<Scalar>& a, const HermitianMatrix<Scalar>& b) {
  if (a.dim() != b.dim()) throw InputError("commutator_norm: dimension mismatch");
  const DenseMatrix<Scalar> c = a.matrix() * b.matrix() - b.matrix() * a.matrix();
  // c is skew-hermitian, so c*c is hermitian PSD with ‖c‖² as top eigenvalue.
  return std::sqrt(std::max(0.0, lambda_max(HermitianMatrix<Scalar>(c.adjoint() * c))));
}

/// Isometric coordinates of a hermitian n×n matrix in R^{n²} (real inner
/// product Re trace(AB)): diagonal entries, then √2·Re and √2·Im of the
/// strict upper triangle in row order.
inline Eigen::VectorXd hvec(const MatrixXc& m) {
  const Index n = m.rows();
  Eigen::VectorXd out(n * n);
  Index k = 0;
  for (Index i = 0; i < n; ++i) out(k++) = std::real(m(i, i));
  const double r2 = std::sqrt(2.0);
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) {
      out(k++) = r2 * std::real(m(i, j));
      out(k++) = r2 * std::imag(m(i, j));
    }
  return out;
}

inline Eigen::VectorXd hvec(const Hermitian& h) { return hvec(h.matrix()); }

inline Hermitian hunvec(const Eigen::VectorXd& v, Index n) {
  if (v.size() != n * n) throw InputError("hunvec: length mismatch");
  MatrixXc m = MatrixXc::Zero(n, n);
  Index k = 0;
  for (Index i = 0; i < n; ++i) m(i, i) = v(k++);
  const double r2 = std::sqrt(2.0);
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) {
      const cplx z(v(k) / r2, v(k + 1) / r2);
      k += 2;
      m(i, j) = z;
      m(j, i) = std::conj(z);
    }
  return Hermitian(std::move(m));
}

/// Orthonormal hermitian basis of M_n (real dimension n²): E_ii, then
/// (E_ij + E_ji)/√2 and i(E_ij − E_ji)/√2 for i < j. hvec maps it to the
/// standard basis.
inline std::vector<Hermitian> canonical_hermitian_basis(Index n) {
  std::vector<Hermitian> out;
  out.reserve(std::size_t(n * n));
  for (Index k = 0; k < n * n; ++k) out.push_back(hunvec(Eigen::VectorXd::Unit(n * n, k), n));
  return out;
}

/// Matrix unit E_ij (not hermitian unless i == j).
inline MatrixXc matrix_unit(Index n, Index i, Index j) {
  MatrixXc m = MatrixXc::Zero(n, n);
  m(i, j) = 1.0;
  return m;
}

/// Real-linear combination Σ x_i B_i of hermitian matrices.
inline Hermitian combine(const std::vector<Hermitian>& basis, const Eigen::VectorXd& x) {
  if (basis.empty()) throw InputError("combine: empty basis");
  if (Index(basis.size()) != x.size()) throw InputError("combine: coefficient length mismatch");
  MatrixXc m = MatrixXc::Zero(basis.front().dim(), basis.front().dim());
  for (std::size_t i = 0; i < basis.size(); ++i) m += x(Index(i)) * basis[i].matrix();
  return Hermitian(std::move(m));
}

}  // namespace opsyslab
