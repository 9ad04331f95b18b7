#include "opsyslab/sdp.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <cstdio>
#include <cstdlib>

namespace opsyslab {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Barrier kernel: minimize cᵀz over {G_k(z) ≻ 0, lin_b + lin_a z > 0}.

constexpr double kFirstBox = 1e3;
constexpr double kBoxGrowth = 100.0;

struct IBlock {
  MatrixXc g0;
  std::vector<MatrixXc> g;

  MatrixXc at(const VectorXd& z) const {
    MatrixXc f = g0;
    for (std::size_t j = 0; j < g.size(); ++j)
      if (z(Index(j)) != 0.0) f += z(Index(j)) * g[j];
    return f;
  }
};

struct IProblem {
  std::vector<IBlock> blocks;
  MatrixXd lin_a;
  VectorXd lin_b;
  VectorXd c;

  Index dim() const { return c.size(); }
  double degree() const {
    double nu = double(lin_b.size());
    for (const auto& b : blocks) nu += double(b.g0.rows());
    return nu;
  }
};

struct BarrierResult {
  bool converged = false;
  VectorXd z;
  std::vector<MatrixXc> dual_blocks;
  std::vector<MatrixXc> plain_dual;  // G⁻¹/t, PSD by construction
  VectorXd dual_lin;
  double t = 0.0;
  int newton = 0;
  std::string message;
};

// Value of t·cᵀz − Σ log det G_k − Σ log s_i; +inf outside the domain.
double barrier_value(const IProblem& p, const VectorXd& z, double t) {
  double f = t * p.c.dot(z);
  for (const auto& b : p.blocks) {
    Eigen::LLT<MatrixXc> llt(b.at(z));
    if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
    const auto& l = llt.matrixLLT();
    for (Index i = 0; i < l.rows(); ++i) {
      const double d = std::real(l(i, i));
      if (!(d > 0)) return std::numeric_limits<double>::infinity();
      f -= 2.0 * std::log(d);
    }
  }
  if (p.lin_b.size() > 0) {
    const VectorXd s = p.lin_b + p.lin_a * z;
    for (Index i = 0; i < s.size(); ++i) {
      if (!(s(i) > 0)) return std::numeric_limits<double>::infinity();
      f -= std::log(s(i));
    }
  }
  return f;
}

struct Derivatives {
  VectorXd grad;
  MatrixXd hess;
  std::vector<MatrixXc> finv;
  VectorXd slack;
};

bool derivatives(const IProblem& p, const VectorXd& z, double t, Derivatives& d) {
  const Index n = p.dim();
  d.grad = t * p.c;
  d.hess = MatrixXd::Zero(n, n);
  d.finv.clear();
  for (const auto& b : p.blocks) {
    const Index k = b.g0.rows();
    Eigen::LLT<MatrixXc> llt(b.at(z));
    if (llt.info() != Eigen::Success) return false;
    const MatrixXc linv = llt.matrixL().solve(MatrixXc::Identity(k, k));
    d.finv.push_back(linv.adjoint() * linv);
    if (n == 0) continue;
    MatrixXc w(k * k, n);
    for (Index j = 0; j < n; ++j) {
      const MatrixXc s = linv * b.g[std::size_t(j)] * linv.adjoint();
      d.grad(j) -= std::real(s.trace());
      w.col(j) = Eigen::Map<const Eigen::VectorXcd>(s.data(), k * k);
    }
    d.hess.noalias() += (w.adjoint() * w).real();
  }
  if (p.lin_b.size() > 0) {
    d.slack = p.lin_b + p.lin_a * z;
    if ((d.slack.array() <= 0).any()) return false;
    const VectorXd inv = d.slack.cwiseInverse();
    d.grad.noalias() -= p.lin_a.transpose() * inv;
    d.hess.noalias() += p.lin_a.transpose() * inv.cwiseAbs2().asDiagonal() * p.lin_a;
  }
  return true;
}

// Newton centering at fixed t. On success r.z is centered and the dual
// estimate built from the final Newton step is stored.
bool center(const IProblem& p, VectorXd& z, double t, int max_newton, BarrierResult& r) {
  const Index n = p.dim();
  Derivatives d;
  double prev_dec2 = std::numeric_limits<double>::infinity();
  for (int it = 0; it < max_newton; ++it) {
    if (!derivatives(p, z, t, d)) {
      r.message = "iterate left the barrier domain";
      return false;
    }
    VectorXd step = VectorXd::Zero(n);
    if (n > 0) {
      Eigen::LDLT<MatrixXd> ldlt(d.hess);
      step = -ldlt.solve(d.grad);
      if (!step.allFinite()) {
        r.message = "singular Newton system";
        return false;
      }
    }
    const double dec2 = std::max(0.0, -d.grad.dot(step));
    // Near the noise floor of the gradient the decrement stops shrinking.
    bool done = dec2 <= 1e-14 || (dec2 <= 1e-8 && dec2 >= 0.5 * prev_dec2);
    prev_dec2 = dec2;
    if (!done) {
      // Damped Newton step of self-concordant theory; halve only to stay
      // inside the domain.
      double alpha = dec2 > 0.0625 ? 1.0 / (1.0 + std::sqrt(dec2)) : 1.0;
      bool accepted = false;
      while (alpha > 1e-12) {
        const VectorXd trial = z + alpha * step;
        if (std::isfinite(barrier_value(p, trial, t))) {
          z = trial;
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
      ++r.newton;
      if (!accepted) {
        if (dec2 > 1e-8) {
          r.message = "line search stalled (Newton decrement² " + std::to_string(dec2) + ")";
          return false;
        }
        done = true;
      }
    }
    if (done) {
      r.dual_blocks.clear();
      r.plain_dual.clear();
      for (std::size_t k = 0; k < p.blocks.size(); ++k) {
        const auto& b = p.blocks[k];
        MatrixXc df = MatrixXc::Zero(b.g0.rows(), b.g0.cols());
        for (Index j = 0; j < n; ++j) df += step(j) * b.g[std::size_t(j)];
        const MatrixXc& fi = d.finv[k];
        MatrixXc zk = (fi - fi * df * fi) / t;
        zk = (zk + zk.adjoint()).eval() / 2.0;
        r.dual_blocks.push_back(std::move(zk));
        r.plain_dual.push_back(fi / t);
      }
      if (p.lin_b.size() > 0) {
        const VectorXd as = p.lin_a * step;
        r.dual_lin = (d.slack.cwiseInverse() - as.cwiseQuotient(d.slack.cwiseAbs2())) / t;
      } else {
        r.dual_lin.resize(0);
      }
      return true;
    }
  }
  r.message = "Newton iteration limit reached";
  return false;
}

// Short-step path following from a strictly feasible z0 until the barrier gap
// ν/t falls below gap_abs(z) (a callback so it can be relative to the value).
template <typename GapTarget>
BarrierResult path_follow(const IProblem& p, VectorXd z0, const SdpConfig& cfg,
                          GapTarget&& gap_target) {
  BarrierResult r;
  r.z = std::move(z0);
  const double nu = p.degree();
  const double cnorm = p.c.norm();
  if (cnorm == 0.0) {
    r.t = 1.0;
    r.converged = center(p, r.z, 1.0, cfg.max_newton, r);
    return r;
  }
  double t = 1.0 / cnorm;
  for (int outer = 0; outer < 60; ++outer) {
    if (!center(p, r.z, t, cfg.max_newton, r)) return r;
    r.t = t;
    if (nu / t <= gap_target(r.z)) {
      r.converged = true;
      return r;
    }
    t *= 8.0;
  }
  r.message = "barrier parameter limit reached";
  return r;
}

// ---------------------------------------------------------------------------
// Linear algebra helpers.

// Orthonormal bases of range and null space of the columns' span map.
struct RangeNull {
  MatrixXd range;  // columns span row space complement of the null space
  MatrixXd null;
};

RangeNull range_null(const MatrixXd& m, Index cols, double rel_tol) {
  RangeNull out;
  if (cols == 0) {
    out.range = MatrixXd(0, 0);
    out.null = MatrixXd(0, 0);
    return out;
  }
  if (m.rows() == 0) {
    out.range = MatrixXd(cols, 0);
    out.null = MatrixXd::Identity(cols, cols);
    return out;
  }
  Eigen::JacobiSVD<MatrixXd> svd(m, Eigen::ComputeFullV);
  const VectorXd& s = svd.singularValues();
  const double smax = s.size() > 0 ? s(0) : 0.0;
  Index rank = 0;
  for (Index i = 0; i < s.size(); ++i)
    if (s(i) > rel_tol * std::max(smax, 1e-300) && s(i) > 1e-14) ++rank;
  out.range = svd.matrixV().leftCols(rank);
  out.null = svd.matrixV().rightCols(cols - rank);
  return out;
}

double block_scale(const std::vector<LmiBlock>& blocks) {
  double s = 1.0;
  for (const auto& b : blocks) {
    s = std::max(s, b.constant.matrix().norm());
    for (const auto& f : b.coefficients) s = std::max(s, f.matrix().norm());
  }
  return s;
}

MatrixXc lift(const MatrixXc& v, const MatrixXc& z) { return v * z * v.adjoint(); }

Hermitian to_hermitian(const MatrixXc& m) {
  MatrixXc h = (m + m.adjoint()) / 2.0;
  return Hermitian(std::move(h));
}

// Projector onto the eigenspace of the smallest eigenvalue (within rel tol),
// normalized to unit trace.
MatrixXc bottom_projector(const MatrixXc& f) {
  const auto e = eigh(Hermitian(f));
  const double lo = e.eigenvalues(0);
  const double span = std::max(1.0, std::abs(e.eigenvalues(e.eigenvalues.size() - 1)));
  MatrixXc z = MatrixXc::Zero(f.rows(), f.cols());
  int count = 0;
  for (Index i = 0; i < e.eigenvalues.size(); ++i)
    if (e.eigenvalues(i) <= lo + 1e-12 * span) {
      z += e.eigenvectors.col(i) * e.eigenvectors.col(i).adjoint();
      ++count;
    }
  return z / double(count);
}

}  // namespace

// ---------------------------------------------------------------------------

std::string to_string(SdpStatus s) {
  switch (s) {
    case SdpStatus::Optimal: return "OPTIMAL";
    case SdpStatus::Infeasible: return "INFEASIBLE";
    case SdpStatus::Unbounded: return "UNBOUNDED";
    case SdpStatus::NumericalFailure: return "NUMERICAL_FAILURE";
  }
  return "UNKNOWN";
}

Hermitian LmiBlock::evaluate(const Eigen::VectorXd& x) const {
  if (Index(coefficients.size()) != x.size())
    throw InputError("LmiBlock::evaluate: expected " + std::to_string(coefficients.size()) +
                     " coefficients, got " + std::to_string(x.size()));
  MatrixXc f = constant.matrix();
  for (std::size_t i = 0; i < coefficients.size(); ++i) f += x(Index(i)) * coefficients[i].matrix();
  return Hermitian(std::move(f));
}

void validate(const SdpProblem& p) {
  const Index m = p.num_variables();
  if (!(p.strict_margin >= 0)) throw InputError("strict_margin must be nonnegative");
  if (!p.objective.allFinite()) throw InputError("objective contains non-finite entries");
  for (std::size_t k = 0; k < p.blocks.size(); ++k) {
    const auto& b = p.blocks[k];
    if (b.constant.empty()) throw InputError("block " + std::to_string(k) + " has no constant");
    if (b.dim() > kMaxEigenDim) throw InputError("block " + std::to_string(k) + " too large");
    if (Index(b.coefficients.size()) != m)
      throw InputError("block " + std::to_string(k) + " has " +
                       std::to_string(b.coefficients.size()) + " coefficients, expected " +
                       std::to_string(m));
    for (const auto& f : b.coefficients)
      if (f.dim() != b.dim())
        throw InputError("block " + std::to_string(k) + " coefficient dimension mismatch");
  }
  if (p.eq_matrix.size() > 0 || p.eq_rhs.size() > 0) {
    if (p.eq_matrix.cols() != m || p.eq_matrix.rows() != p.eq_rhs.size())
      throw InputError("equality constraint shape mismatch");
  }
}

CertificateResiduals verify_certificate(const std::vector<LmiBlock>& blocks,
                                        const std::vector<Hermitian>& z, double margin) {
  CertificateResiduals r;
  r.max_equality = std::numeric_limits<double>::infinity();
  r.constant = std::numeric_limits<double>::infinity();
  r.min_eigenvalue = -std::numeric_limits<double>::infinity();
  if (z.size() != blocks.size() || blocks.empty()) return r;
  double trace = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) {
    if (z[k].dim() != blocks[k].dim()) return r;
    trace += std::real(z[k].matrix().trace());
  }
  if (!(trace > 0)) return r;
  const std::size_t m = blocks.front().coefficients.size();
  r.max_equality = 0.0;
  r.constant = 0.0;
  r.min_eigenvalue = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < m; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < z.size(); ++k) s += real_inner(z[k], blocks[k].coefficients[i]);
    r.max_equality = std::max(r.max_equality, std::abs(s) / trace);
  }
  for (std::size_t k = 0; k < z.size(); ++k) {
    r.constant += (real_inner(z[k], blocks[k].constant) -
                   margin * std::real(z[k].matrix().trace())) / trace;
    r.min_eigenvalue = std::min(r.min_eigenvalue, lambda_min(z[k]) / trace);
  }
  return r;
}

// ---------------------------------------------------------------------------

struct PreparedSdp::Impl {
  SdpConfig cfg;
  std::vector<LmiBlock> original;  // with the strict margin already subtracted
  double margin = 0.0;
  Index m = 0;
  double scale = 1.0;

  // Current level: x = x0 + q y, blocks G_k = V_k* F_k(x) V_k.
  VectorXd x0;
  MatrixXd q;
  std::vector<MatrixXc> v;          // one per original block; 0 columns = dropped
  std::vector<MatrixXd> null_dirs;  // x-space directions with Σ d_i F_ki = 0
  IProblem level;                   // blocks only (lin/c filled per use)
  std::vector<std::size_t> level_map;  // level block -> original block
  VectorXd y_feasible;
  SdpSolution feas;

  void build_level() {
    level.blocks.clear();
    level_map.clear();
    const Index p = q.cols();
    for (std::size_t k = 0; k < original.size(); ++k) {
      if (v[k].cols() == 0) continue;
      IBlock b;
      const MatrixXc& vk = v[k];
      b.g0 = vk.adjoint() * original[k].evaluate(x0).matrix() * vk;
      b.g.resize(std::size_t(p));
      for (Index j = 0; j < p; ++j) {
        MatrixXc f = MatrixXc::Zero(original[k].dim(), original[k].dim());
        for (Index i = 0; i < m; ++i)
          if (q(i, j) != 0.0) f += q(i, j) * original[k].coefficients[std::size_t(i)].matrix();
        b.g[std::size_t(j)] = vk.adjoint() * f * vk;
      }
      level.blocks.push_back(std::move(b));
      level_map.push_back(k);
    }
  }

  // Drops y-directions that no block sees.
  void remove_null_directions() {
    const Index p = q.cols();
    if (p == 0) return;
    Index rows = 0;
    for (const auto& b : level.blocks) rows += b.g0.rows() * b.g0.rows();
    MatrixXd a(rows, p);
    Index r0 = 0;
    for (const auto& b : level.blocks) {
      const Index d = b.g0.rows();
      for (Index j = 0; j < p; ++j) a.block(r0, j, d * d, 1) = hvec(b.g[std::size_t(j)]);
      r0 += d * d;
    }
    const RangeNull rn = range_null(a, p, 1e-10);
    if (rn.null.cols() == 0) return;
    null_dirs.push_back(q * rn.null);
    q = q * rn.range;
    build_level();
  }

  double lambda_cap() const {
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& b : level.blocks) lo = std::min(lo, lambda_min(Hermitian(b.g0)));
    return std::max(10.0 * scale, std::abs(lo) + 10.0 * scale);
  }

  // Feasibility phase on the current level. Fills lambda, y and the lifted
  // dual blocks (one per original block, zero for dropped ones).
  struct PhaseOne {
    bool ok = false;
    double lambda = 0.0;
    VectorXd y;
    std::vector<MatrixXc> dual;      // per level block
    std::vector<MatrixXc> exposing;  // PSD estimate used for facial reduction
    int newton = 0;
    std::string message;
  };

  PhaseOne phase_one() const {
    PhaseOne out;
    const Index p = q.cols();
    if (level.blocks.empty()) {
      out.ok = true;
      out.lambda = std::numeric_limits<double>::infinity();
      out.y = VectorXd::Zero(p);
      return out;
    }
    if (p == 0) {
      out.ok = true;
      out.y = VectorXd::Zero(0);
      out.lambda = std::numeric_limits<double>::infinity();
      std::size_t worst = 0;
      for (std::size_t k = 0; k < level.blocks.size(); ++k) {
        const double lo = lambda_min(Hermitian(level.blocks[k].g0));
        if (lo < out.lambda) {
          out.lambda = lo;
          worst = k;
        }
      }
      for (std::size_t k = 0; k < level.blocks.size(); ++k) {
        const Index d = level.blocks[k].g0.rows();
        out.dual.push_back(k == worst ? bottom_projector(level.blocks[k].g0)
                                      : MatrixXc::Zero(d, d));
      }
      out.exposing = out.dual;
      return out;
    }
    IProblem ph;
    for (const auto& b : level.blocks) {
      IBlock nb = b;
      nb.g.push_back(-MatrixXc::Identity(b.g0.rows(), b.g0.cols()));
      ph.blocks.push_back(std::move(nb));
    }
    const double cap = lambda_cap();
    ph.c = VectorXd::Zero(p + 1);
    ph.c(p) = -1.0;
    VectorXd z0 = VectorXd::Zero(p + 1);
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& b : level.blocks) lo = std::min(lo, lambda_min(Hermitian(b.g0)));
    z0(p) = lo - 1.0;
    const double target = 1e-2 * cfg.psd_slack * scale;
    const double tol = cfg.psd_slack * scale;

    // Small box first: flat unbounded directions make the iterates drift to
    // the box, which ruins conditioning when the box is huge.
    for (double box = std::min(cfg.box, kFirstBox);; box = std::min(cfg.box, box * kBoxGrowth)) {
      ph.lin_a = MatrixXd::Zero(2 * p + 1, p + 1);
      ph.lin_b = VectorXd::Constant(2 * p + 1, box);
      ph.lin_a(0, p) = -1.0;
      ph.lin_b(0) = cap;
      for (Index j = 0; j < p; ++j) {
        ph.lin_a(1 + 2 * j, j) = -1.0;
        ph.lin_a(2 + 2 * j, j) = 1.0;
      }
      BarrierResult r = path_follow(ph, z0, cfg, [&](const VectorXd&) { return target; });
      out.newton += r.newton;
      if (!r.converged) {
        if (!out.ok) out.message = "feasibility phase: " + r.message;
        return out;
      }
      const bool box_active = p > 0 && r.z.head(p).cwiseAbs().maxCoeff() > 0.5 * box;
      if (out.ok && box_active && r.z(p) <= out.lambda + target) return out;
      out.ok = true;
      out.lambda = r.z(p);
      out.y = r.z.head(p);
      out.dual = r.dual_blocks;
      out.exposing = r.plain_dual;
      if (!box_active || out.lambda > tol || box >= cfg.box) return out;
    }
  }

  // Restricts the current level to the face exposed by the dual blocks.
  bool facial_reduce(const std::vector<MatrixXc>& dual, std::string& message) {
    double zmax = 0.0;
    std::vector<EigenDecomposition<cplx>> eig;
    for (const auto& zk : dual) {
      eig.push_back(eigh(Hermitian(MatrixXc((zk + zk.adjoint()) / 2.0))));
      zmax = std::max(zmax, eig.back().eigenvalues.maxCoeff());
    }
    if (!(zmax > 0)) {
      message = "facial reduction: empty exposing certificate";
      return false;
    }
    const double thresh = 1e-6 * zmax;
    const Index p = q.cols();
    // Equations V1* G(y) V1 = 0 and V1* G(y) V0 = 0 for each block.
    std::vector<MatrixXc> keep(level.blocks.size());
    std::vector<double> rows_re;
    MatrixXd eqa(0, p);
    VectorXd eqb(0);
    auto append = [&](const MatrixXc& lhs0, const std::vector<MatrixXc>& lhs, bool herm) {
      // Real equations from entries of a complex matrix expression.
      const Index rr = lhs0.rows(), cc = lhs0.cols();
      std::vector<std::pair<Index, Index>> ent;
      for (Index i = 0; i < rr; ++i)
        for (Index j = herm ? i : 0; j < cc; ++j) ent.emplace_back(i, j);
      const Index base = eqa.rows();
      Index add = 0;
      for (auto [i, j] : ent) add += (herm && i == j) ? 1 : 2;
      eqa.conservativeResize(base + add, p);
      eqb.conservativeResize(base + add);
      Index row = base;
      for (auto [i, j] : ent) {
        const bool diag = herm && i == j;
        for (int part = 0; part < (diag ? 1 : 2); ++part) {
          auto pick = [&](const cplx& z) { return part == 0 ? std::real(z) : std::imag(z); };
          eqb(row) = -pick(lhs0(i, j));
          for (Index k = 0; k < p; ++k) eqa(row, k) = pick(lhs[std::size_t(k)](i, j));
          ++row;
        }
      }
    };
    bool any = false;
    for (std::size_t k = 0; k < level.blocks.size(); ++k) {
      const auto& e = eig[k];
      std::vector<Index> big, small;
      for (Index i = 0; i < e.eigenvalues.size(); ++i)
        (e.eigenvalues(i) > thresh ? big : small).push_back(i);
      MatrixXc v1(e.eigenvectors.rows(), Index(big.size()));
      MatrixXc v0(e.eigenvectors.rows(), Index(small.size()));
      for (std::size_t i = 0; i < big.size(); ++i) v1.col(Index(i)) = e.eigenvectors.col(big[i]);
      for (std::size_t i = 0; i < small.size(); ++i) v0.col(Index(i)) = e.eigenvectors.col(small[i]);
      keep[k] = v0;
      if (big.empty()) continue;
      any = true;
      const auto& b = level.blocks[k];
      std::vector<MatrixXc> l11, l10;
      for (const auto& g : b.g) {
        l11.push_back(v1.adjoint() * g * v1);
        l10.push_back(v1.adjoint() * g * v0);
      }
      append(v1.adjoint() * b.g0 * v1, l11, true);
      if (v0.cols() > 0) append(v1.adjoint() * b.g0 * v0, l10, false);
    }
    if (!any) {
      message = "facial reduction: no exposed face";
      return false;
    }
    VectorXd y0 = VectorXd::Zero(p);
    MatrixXd nb = MatrixXd::Identity(p, p);
    if (p > 0 && eqa.rows() > 0) {
      Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(eqa);
      cod.setThreshold(1e-10);
      y0 = cod.solve(eqb);
      const double res = (eqa * y0 - eqb).norm();
      if (res > 1e-6 * scale) {
        message = "facial reduction: face is empty (residual " + std::to_string(res) + ")";
        return false;
      }
      nb = range_null(eqa, p, 1e-10).null;
    }
    x0 = x0 + q * y0;
    q = q * nb;
    for (std::size_t k = 0; k < level.blocks.size(); ++k) {
      const std::size_t orig = level_map[k];
      v[orig] = v[orig] * keep[k];
    }
    build_level();
    return true;
  }

  void prepare() {
    feas = SdpSolution{};
    if (level.blocks.empty() && original.empty()) {
      feas.status = SdpStatus::Optimal;
      feas.value = std::numeric_limits<double>::infinity();
      feas.x = x0;
      y_feasible = VectorXd::Zero(q.cols());
      return;
    }
    const int max_levels = 1 + [&] {
      int s = 0;
      for (const auto& b : original) s += int(b.dim());
      return s;
    }();
    for (int lvl = 0; lvl <= max_levels; ++lvl) {
      remove_null_directions();
      PhaseOne ph = phase_one();
      feas.newton_iterations += ph.newton;
      if (!ph.ok) {
        feas.status = SdpStatus::NumericalFailure;
        feas.message = ph.message;
        return;
      }
      const double tol = cfg.psd_slack * scale;
      const bool determined = q.cols() == 0;
      if (ph.lambda > tol || (determined && ph.lambda >= -tol) || level.blocks.empty()) {
        feas.status = SdpStatus::Optimal;
        feas.value = lvl == 0 ? ph.lambda : 0.0;
        y_feasible = ph.y;
        feas.x = x0 + q * ph.y;
        return;
      }
      if (ph.lambda < -tol) {
        std::vector<Hermitian> cert;
        std::size_t li = 0;
        for (std::size_t k = 0; k < original.size(); ++k) {
          if (v[k].cols() == 0) {
            cert.push_back(Hermitian::zero(original[k].dim()));
            continue;
          }
          cert.push_back(to_hermitian(lift(v[k], ph.dual[li++])));
        }
        feas.value = lvl == 0 ? ph.lambda : ph.lambda;
        const auto res = verify_certificate(original, cert, 0.0);
        if (res.valid(cfg.certificate_tol)) {
          feas.status = SdpStatus::Infeasible;
          feas.dual_certificate = std::move(cert);
        } else {
          feas.status = SdpStatus::NumericalFailure;
          feas.message = lvl == 0 ? "infeasibility certificate failed re-verification"
                                  : "weakly infeasible: no Farkas certificate exists";
        }
        feas.x = x0 + q * ph.y;
        return;
      }
      if (!facial_reduce(ph.exposing, feas.message)) {
        feas.status = SdpStatus::NumericalFailure;
        return;
      }
      ++feas.facial_reductions;
    }
    feas.status = SdpStatus::NumericalFailure;
    feas.message = "facial reduction did not terminate";
  }

  SdpSolution minimize(const VectorXd& c) const {
    if (c.size() != m) throw InputError("objective length mismatch");
    SdpSolution sol;
    sol.facial_reductions = feas.facial_reductions;
    if (feas.status != SdpStatus::Optimal) {
      sol = feas;
      return sol;
    }
    const double cn = c.norm();
    for (const auto& nd : null_dirs)
      for (Index j = 0; j < nd.cols(); ++j) {
        const VectorXd d = nd.col(j);
        const double cd = c.dot(d);
        if (std::abs(cd) > 1e-9 * std::max(1.0, cn) * d.norm()) {
          sol.status = SdpStatus::Unbounded;
          sol.ray = cd < 0 ? d : VectorXd(-d);
          sol.x = feas.x;
          sol.value = -std::numeric_limits<double>::infinity();
          sol.message = "objective decreases along a direction invisible to every block";
          return sol;
        }
      }
    const Index p = q.cols();
    const VectorXd cy = q.transpose() * c;
    const double c0 = c.dot(x0);
    if (p == 0 || cy.norm() <= 1e-14 * std::max(1.0, cn) || level.blocks.empty()) {
      if (p > 0 && level.blocks.empty() && cy.norm() > 1e-14 * std::max(1.0, cn)) {
        sol.status = SdpStatus::Unbounded;
        sol.ray = -(q * cy).normalized();
        sol.x = feas.x;
        sol.value = -std::numeric_limits<double>::infinity();
        return sol;
      }
      sol.status = SdpStatus::Optimal;
      sol.x = feas.x;
      sol.value = c.dot(sol.x);
      sol.dual_bound = sol.value;
      return sol;
    }
    IProblem pr = level;
    pr.c = cy;
    const double gap_tol = cfg.gap_tol;
    const double y_inf = y_feasible.size() > 0 ? y_feasible.cwiseAbs().maxCoeff() : 0.0;
    std::optional<SdpSolution> prev;
    // Zero-cost recession directions push the iterates onto the box; the
    // box grows only while the optimal value still moves.
    for (double box = std::min(cfg.box, std::max(kFirstBox, 10.0 * y_inf));;
         box = std::min(cfg.box, box * kBoxGrowth)) {
      if (box <= 1.01 * y_inf) {
        sol.status = SdpStatus::NumericalFailure;
        sol.message = "feasible point lies outside the big-M box";
        return sol;
      }
      pr.lin_a = MatrixXd::Zero(2 * p, p);
      pr.lin_b = VectorXd::Constant(2 * p, box);
      for (Index j = 0; j < p; ++j) {
        pr.lin_a(2 * j, j) = -1.0;
        pr.lin_a(2 * j + 1, j) = 1.0;
      }
      BarrierResult r = path_follow(pr, y_feasible, cfg, [&](const VectorXd& y) {
        return 0.1 * gap_tol * (1.0 + std::abs(c0 + cy.dot(y)));
      });
      SdpSolution cur = finish(pr, r, c, c0);
      cur.newton_iterations += sol.newton_iterations + (prev ? prev->newton_iterations : 0);
      if (!r.converged || cur.status != SdpStatus::Optimal) return prev ? *prev : cur;
      const bool box_active = r.z.cwiseAbs().maxCoeff() > 0.5 * box;
      if (!box_active) return cur;
      if (prev && std::abs(cur.value - prev->value) <= gap_tol * (1.0 + std::abs(cur.value)))
        return *prev;
      if (box >= cfg.box) {
        // The value kept improving up to the largest box: look for a ray.
        VectorXd d = q * (r.z - y_feasible);
        d.normalize();
        bool recession = c.dot(d) < -1e-6 * std::max(1.0, cn);
        for (const auto& b : original) {
          MatrixXc f = MatrixXc::Zero(b.dim(), b.dim());
          for (Index i = 0; i < m; ++i) f += d(i) * b.coefficients[std::size_t(i)].matrix();
          recession = recession && lambda_min(Hermitian(f)) >= -1e-6 * scale;
        }
        if (!recession) {
          cur.status = SdpStatus::NumericalFailure;
          cur.message = "iterates reached the big-M box without an improving ray";
          return cur;
        }
        cur.status = SdpStatus::Unbounded;
        cur.ray = d;
        cur.value = -std::numeric_limits<double>::infinity();
        cur.message = "objective decreases along a recession direction";
        return cur;
      }
      prev = std::move(cur);
    }
  }

  // Solution record from a converged phase-2 run, with dual checks.
  SdpSolution finish(const IProblem& pr, const BarrierResult& r, const VectorXd& c,
                     double c0) const {
    SdpSolution sol;
    sol.facial_reductions = feas.facial_reductions;
    sol.newton_iterations = r.newton;
    sol.x = x0 + q * r.z;
    if (!r.converged) {
      sol.status = SdpStatus::NumericalFailure;
      sol.message = r.message;
      return sol;
    }
    sol.value = c.dot(sol.x);
    double dual = c0;
    for (std::size_t k = 0; k < pr.blocks.size(); ++k)
      dual -= std::real((r.dual_blocks[k] * pr.blocks[k].g0).trace());
    dual -= r.dual_lin.dot(pr.lin_b);
    sol.dual_bound = dual;
    sol.dual_point.reserve(original.size());
    std::size_t li = 0;
    for (std::size_t k = 0; k < original.size(); ++k) {
      if (v[k].cols() == 0) {
        sol.dual_point.push_back(Hermitian::zero(original[k].dim()));
        continue;
      }
      sol.dual_point.push_back(to_hermitian(lift(v[k], r.dual_blocks[li++])));
    }
    const double gap = sol.value - dual;
    if (gap < -1e-9 * (1.0 + std::abs(sol.value))) {
      sol.status = SdpStatus::NumericalFailure;
      sol.message = "weak duality violated (gap " + std::to_string(gap) + ")";
      return sol;
    }
    if (gap > cfg.gap_tol * (1.0 + std::abs(sol.value))) {
      sol.status = SdpStatus::NumericalFailure;
      sol.message = "duality gap " + std::to_string(gap) + " above tolerance";
      return sol;
    }
    sol.status = SdpStatus::Optimal;
    return sol;
  }
};

PreparedSdp::PreparedSdp(std::vector<LmiBlock> blocks, Index num_variables, double strict_margin,
                         const SdpConfig& config, Eigen::MatrixXd eq_matrix,
                         Eigen::VectorXd eq_rhs)
    : impl_(std::make_unique<Impl>()) {
  SdpProblem check;
  check.objective = VectorXd::Zero(num_variables);
  check.blocks = blocks;
  check.strict_margin = strict_margin;
  check.eq_matrix = eq_matrix;
  check.eq_rhs = eq_rhs;
  validate(check);

  Impl& s = *impl_;
  s.cfg = config;
  s.m = num_variables;
  s.margin = strict_margin;
  s.original = std::move(blocks);
  if (strict_margin > 0)
    for (auto& b : s.original)
      b.constant = b.constant - strict_margin * Hermitian::identity(b.dim());
  s.scale = block_scale(s.original);

  s.x0 = VectorXd::Zero(s.m);
  s.q = MatrixXd::Identity(s.m, s.m);
  if (eq_matrix.rows() > 0) {
    Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(eq_matrix);
    cod.setThreshold(1e-10);
    s.x0 = cod.solve(eq_rhs);
    const double res = (eq_matrix * s.x0 - eq_rhs).norm();
    if (res > 1e-9 * (1.0 + eq_rhs.norm()))
      throw InputError("equality constraints are inconsistent (residual " + std::to_string(res) +
                       ")");
    s.q = range_null(eq_matrix, s.m, 1e-10).null;
  }
  for (const auto& b : s.original) s.v.push_back(MatrixXc::Identity(b.dim(), b.dim()));
  s.build_level();
  s.prepare();
}

PreparedSdp::~PreparedSdp() = default;
PreparedSdp::PreparedSdp(PreparedSdp&&) noexcept = default;
PreparedSdp& PreparedSdp::operator=(PreparedSdp&&) noexcept = default;

const SdpSolution& PreparedSdp::feasibility() const { return impl_->feas; }

SdpSolution PreparedSdp::minimize(const Eigen::VectorXd& objective) const {
  return impl_->minimize(objective);
}

SdpSolution solve(const SdpProblem& p, const SdpConfig& config) {
  validate(p);
  PreparedSdp prepared(p.blocks, p.num_variables(), p.strict_margin, config, p.eq_matrix,
                       p.eq_rhs);
  if (!prepared.feasible()) return prepared.feasibility();
  return prepared.minimize(p.objective);
}

SdpSolution check_feasibility(const std::vector<LmiBlock>& blocks, double margin,
                              const SdpConfig& config) {
  if (blocks.empty()) throw InputError("check_feasibility: no blocks");
  const Index m = Index(blocks.front().coefficients.size());
  SdpProblem shape;
  shape.objective = VectorXd::Zero(m);
  shape.blocks = blocks;
  validate(shape);

  // Single feasibility phase on the unreduced region: λ* is the max-min slack.
  PreparedSdp::Impl s;
  s.cfg = config;
  s.m = m;
  s.original = blocks;
  s.scale = block_scale(blocks);
  s.x0 = VectorXd::Zero(m);
  s.q = MatrixXd::Identity(m, m);
  for (const auto& b : blocks) s.v.push_back(MatrixXc::Identity(b.dim(), b.dim()));
  s.build_level();
  s.remove_null_directions();
  auto ph = s.phase_one();
  SdpSolution sol;
  sol.newton_iterations = ph.newton;
  if (!ph.ok) {
    sol.status = SdpStatus::NumericalFailure;
    sol.message = ph.message;
    return sol;
  }
  sol.value = ph.lambda;
  sol.x = s.x0 + s.q * ph.y;
  if (ph.lambda > margin) {
    sol.status = SdpStatus::Optimal;
    return sol;
  }
  std::vector<Hermitian> cert;
  for (const auto& zk : ph.dual) cert.push_back(to_hermitian(zk));
  const auto res = verify_certificate(blocks, cert, margin);
  if (res.valid(config.certificate_tol)) {
    sol.status = SdpStatus::Infeasible;
    sol.dual_certificate = std::move(cert);
  } else {
    sol.status = SdpStatus::NumericalFailure;
    sol.message = "certificate failed re-verification";
  }
  return sol;
}

}  // namespace opsyslab
