#pragma once

// Unperforated pairs, commuting truncation, Riesz interpolation sequences and
// UCP desk checks for boundary representations.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "opsyslab/sdp.hpp"
#include "opsyslab/star_algebra.hpp"
#include "opsyslab/state.hpp"

namespace opsyslab {

// ---------------------------------------------------------------------------
// Unperforated pairs

enum class Verdict { Feasible, Infeasible };
std::string to_string(Verdict v);

struct UnperforatedInstance {
  OperatorSubspace s;
  OperatorSubspace t;
  Hermitian a;
  Hermitian b;
  Verdict verdict = Verdict::Infeasible;
  std::optional<Hermitian> b_prime;          // Feasible
  std::vector<Hermitian> certificate;         // Infeasible: Farkas Z_k per block
  std::optional<CertificateResiduals> residuals;
  std::string method;  // "a in T", "norm of b", "sdp"
};

struct InstanceOptions {
  bool shortcuts = true;  // b' = a when a ∈ T, b' = b when ‖b‖ ≤ ‖a‖
  double psd_tol = 1e-7;
  SdpConfig sdp;
};

/// Decides whether some b' ∈ T has a ⪯ b' ⪯ b and ‖b'‖ ≤ ‖a‖. Feasible
/// answers are re-verified; Infeasible answers carry a verified certificate.
/// Throws InputError unless a ∈ S, b ∈ T and a ⪯ b.
UnperforatedInstance solve_unperforated_instance(const OperatorSubspace& s,
                                                 const OperatorSubspace& t, const Hermitian& a,
                                                 const Hermitian& b,
                                                 const InstanceOptions& options = {});

/// Blocks of the feasibility problem in the coordinates of T's basis:
/// b' − a, b − b', ‖a‖I − b', ‖a‖I + b'.
std::vector<LmiBlock> unperforated_blocks(const OperatorSubspace& t, const Hermitian& a,
                                          const Hermitian& b);

/// {β : βt − σs ⪰ 0} as a closed interval; empty or half-infinite allowed.
struct ScalarInterval {
  bool empty = false;
  double lo = 0.0;  // −inf when unbounded below
  double hi = 0.0;  // +inf when unbounded above
};

/// Exact decision for S = C s, T = C t by homogeneity: for α = σ = ±1 the
/// admissible b = βt form the interval I_σ and the pair is unperforated iff
/// every such β admits a γ between the bounds with |γ|‖t‖ ≤ ‖s‖.
struct RankOneDecision {
  bool unperforated = true;
  ScalarInterval plus;   // σ = +1
  ScalarInterval minus;  // σ = −1
  double radius = 0.0;   // ‖s‖/‖t‖
  int t_sign = 0;        // +1: t ⪰ 0, −1: t ⪯ 0, 0: indefinite
  // Counterexample (α, β) when not unperforated.
  std::optional<std::pair<double, double>> counterexample;
};

RankOneDecision decide_rank_one(const Hermitian& s, const Hermitian& t,
                                const SdpConfig& config = {});

/// Randomized refutation: per trial, a ∈ S Gaussian and normalized, b the
/// minimizer of tr(Cb) over {b ∈ T : b ⪰ a} for a random density C. Returns
/// the first infeasible instance. Trial k uses seed + k.
std::optional<UnperforatedInstance> search_counterexample(const OperatorSubspace& s,
                                                          const OperatorSubspace& t, int trials,
                                                          std::uint64_t seed,
                                                          const InstanceOptions& options = {});

/// clip_spectrum(b, ‖a‖) for commuting a ⪯ b.
Hermitian truncate_commuting(const Hermitian& a, const Hermitian& b);

// ---------------------------------------------------------------------------
// Riesz interpolation

struct InterpolationRequest {
  MatrixStarAlgebra b;
  Hermitian a;
  std::vector<Hermitian> lowers;  // ℓ_j ∈ B, ℓ_j ⪯ a
  std::vector<Hermitian> uppers;  // u_k ∈ B, a ⪯ u_k
  double epsilon = 1.0;
  int length = 8;

  /// Membership, orderings and parameters; throws InputError.
  void validate(double tol = 1e-8) const;
};

/// Appends k extreme elements of U_a = {u ∈ B : u ⪰ a} and of L_a, found by
/// minimizing (maximizing) random functionals tr(Cu) with seeded densities C.
void add_extreme_bounds(InterpolationRequest& req, int k, std::uint64_t seed,
                        const SdpConfig& config = {});

/// β_1..β_N in B with ℓ_j − I/n ⪯ β_n ⪯ u_k + I/n and ‖β_n‖ ≤ (1+ε/n)‖a‖.
/// Each β_n maximizes the smallest slack over all blocks. An infeasible
/// request throws NumericalFailure carrying the certificate in the message.
std::vector<Hermitian> riesz_sequence(const InterpolationRequest& req,
                                      const SdpConfig& config = {});

/// The blocks solved at step n, in the coordinates of B's basis.
std::vector<LmiBlock> riesz_blocks(const InterpolationRequest& req, int n);

// ---------------------------------------------------------------------------
// Completely positive maps

/// Choi matrix C = Σ E_ij ⊗ Φ(E_ij) of a map M_in → M_out.
class ChoiMap {
 public:
  ChoiMap() = default;
  /// Throws InputError if C is not PSD (−1e-8) or, when unital, Φ(I) ≠ I (1e-8).
  ChoiMap(Index dim_in, Index dim_out, Hermitian choi, bool unital = true);

  static ChoiMap identity(Index n);
  /// Compression to the diagonal, X ↦ Σ E_ii X E_ii.
  static ChoiMap diagonal_expectation(Index n);
  /// Choi matrix of X ↦ Σ K_r X K_r*.
  static ChoiMap from_kraus(const std::vector<MatrixXc>& kraus, bool unital = true);

  Index dim_in() const { return in_; }
  Index dim_out() const { return out_; }
  const Hermitian& choi() const { return c_; }
  bool unital() const { return unital_; }

  MatrixXc apply(const MatrixXc& x) const;
  Hermitian apply(const Hermitian& x) const { return Hermitian(apply(x.matrix())); }

 private:
  Index in_ = 0;
  Index out_ = 0;
  Hermitian c_;
  bool unital_ = false;
};

/// Φ(X) = Tr₁[(Xᵀ ⊗ I) C].
MatrixXc apply_choi(const Hermitian& choi, Index dim_in, Index dim_out, const MatrixXc& x);

struct FixedExtent {
  double max_deviation = 0.0;
  std::optional<ChoiMap> witness;  // map attaining the deviation
  Hermitian element;               // basis element of A where it is attained
  int sdp_count = 0;
};

/// Largest entrywise deviation of Φ(aᵢ) − aᵢ over UCP Φ: M_n → M_n fixing S
/// pointwise, over a hermitian basis aᵢ of A (default A = M_n).
FixedExtent ucp_fixed_extent(const OperatorSubspace& s, const SdpConfig& config = {});
FixedExtent ucp_fixed_extent(const OperatorSubspace& s, const MatrixStarAlgebra& a,
                             const SdpConfig& config = {});

/// Range of tr(ρ Φ(t)) over the same set of maps.
std::pair<double, double> ucp_functional_range(const OperatorSubspace& s, const Hermitian& rho,
                                               const Hermitian& t, const SdpConfig& config = {});

/// λ* = max{λ_min(π(a) − Π(a)) : a ∈ A hermitian, ‖a‖ ≤ 1}. pi_images[k] is
/// π of the k-th basis element of A.
double nosp_check(const std::vector<Hermitian>& pi_images, const ChoiMap& pi_map,
                  const MatrixStarAlgebra& a, const SdpConfig& config = {});

}  // namespace opsyslab
