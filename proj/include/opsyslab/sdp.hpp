#pragma once

// Small dense semidefinite programs over hermitian linear matrix inequalities:
//
//   minimize  cᵀx   subject to   F_k0 + Σ_i x_i F_ki ⪰ δI   for every block k
//                                A_eq x = b_eq           (optional)
//
// Solved by a primal log-det barrier with damped Newton steps, a big-M
// feasibility phase and facial reduction for feasible sets without interior.

#include <Eigen/Dense>

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "opsyslab/hermitian.hpp"

namespace opsyslab {

struct LmiBlock {
  Hermitian constant;
  std::vector<Hermitian> coefficients;

  Index dim() const { return constant.dim(); }
  /// F0 + Σ x_i F_i.
  Hermitian evaluate(const Eigen::VectorXd& x) const;
};

struct SdpProblem {
  Eigen::VectorXd objective;  // length m
  std::vector<LmiBlock> blocks;
  double strict_margin = 0.0;
  // Optional affine equalities on x; eliminated before the barrier runs.
  Eigen::MatrixXd eq_matrix;
  Eigen::VectorXd eq_rhs;

  Index num_variables() const { return objective.size(); }
};

/// All solver tolerances in one place.
struct SdpConfig {
  double gap_tol = 1e-7;      // relative duality gap at termination
  double psd_slack = 1e-8;    // relative PSD slack for feasibility verdicts
  int max_newton = 200;       // Newton iterations per centering step
  double box = 1e6;           // big-M bound on reduced coordinates
  double certificate_tol = 1e-7;
};

enum class SdpStatus { Optimal, Infeasible, Unbounded, NumericalFailure };

std::string to_string(SdpStatus s);

struct SdpSolution {
  SdpStatus status = SdpStatus::NumericalFailure;
  double value = 0.0;  // optimal value; for check_feasibility the max-min slack
  Eigen::VectorXd x;
  double dual_bound = 0.0;  // lower bound from the dual point (Optimal only)
  // Infeasible: Farkas certificate Z_k ⪰ 0 with Σ_k⟨Z_k, F_ki⟩ = 0 for all i
  // and Σ_k⟨Z_k, F_k0 − δI⟩ < 0.
  std::optional<std::vector<Hermitian>> dual_certificate;
  // Unbounded: direction d with Σ_i d_i F_ki ⪰ 0 and cᵀd < 0.
  std::optional<Eigen::VectorXd> ray;
  // Optimal: dual point Z_k (barrier estimate), Σ_k⟨Z_k, F_ki⟩ ≈ c_i on the
  // face the primal lives on.
  std::vector<Hermitian> dual_point;
  int newton_iterations = 0;
  int facial_reductions = 0;
  std::string message;

  bool ok() const { return status == SdpStatus::Optimal; }
};

struct CertificateResiduals {
  double max_equality = 0.0;  // max_i |Σ_k⟨Z_k, F_ki⟩| after normalizing Σ tr Z_k = 1
  double constant = 0.0;      // Σ_k⟨Z_k, F_k0 − δI⟩ after the same normalization
  double min_eigenvalue = 0.0;
  bool valid(double tol = 1e-7) const {
    return max_equality <= tol && constant < -1e-9 && min_eigenvalue >= -tol;
  }
};

/// Farkas re-verification of an infeasibility certificate.
CertificateResiduals verify_certificate(const std::vector<LmiBlock>& blocks,
                                        const std::vector<Hermitian>& z, double margin = 0.0);

/// Validates block shapes and variable counts; throws InputError.
void validate(const SdpProblem& p);

SdpSolution solve(const SdpProblem& p, const SdpConfig& config = {});

/// Maximizes the smallest slack λ with F_k(x) ⪰ λI over all blocks. Status is
/// Optimal (feasible, λ* > margin) or Infeasible with a certificate; value
/// holds λ* in both cases.
SdpSolution check_feasibility(const std::vector<LmiBlock>& blocks, double margin,
                              const SdpConfig& config = {});

/// A feasible region prepared once (reduction, feasibility phase, facial
/// reduction) and then optimized against many objectives.
class PreparedSdp {
 public:
  PreparedSdp(std::vector<LmiBlock> blocks, Index num_variables, double strict_margin = 0.0,
              const SdpConfig& config = {}, Eigen::MatrixXd eq_matrix = {},
              Eigen::VectorXd eq_rhs = {});
  ~PreparedSdp();
  PreparedSdp(PreparedSdp&&) noexcept;
  PreparedSdp& operator=(PreparedSdp&&) noexcept;

  /// Infeasible/NumericalFailure when the region is empty or the feasibility
  /// phase failed; Optimal otherwise (value = max-min slack, x = its point).
  const SdpSolution& feasibility() const;
  bool feasible() const { return feasibility().status == SdpStatus::Optimal; }

  SdpSolution minimize(const Eigen::VectorXd& objective) const;

 private:
  friend SdpSolution check_feasibility(const std::vector<LmiBlock>&, double, const SdpConfig&);
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace opsyslab
