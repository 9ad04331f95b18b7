#pragma once

// Extension theory of states: extension intervals, the unique extension
// property, purity tests and finite pure decompositions.

#include <optional>
#include <vector>

#include "opsyslab/sdp.hpp"
#include "opsyslab/star_algebra.hpp"
#include "opsyslab/state.hpp"

namespace opsyslab {

inline constexpr double kUepTol = 1e-6;

/// Range of ψ(t) over all state extensions ψ of a state on S to the ambient
/// algebra, with extensions attaining both ends.
struct ExtensionInterval {
  Hermitian element;
  double min = 0.0;
  double max = 0.0;
  StateFunctional min_witness;
  StateFunctional max_witness;

  double length() const { return max - min; }
};

struct PureAtom {
  double weight = 0.0;
  StateFunctional state;
};

struct PureDecomposition {
  std::vector<PureAtom> atoms;
  /// Σ wᵢ Xᵢ over the atom densities.
  Hermitian reconstruct() const;
};

struct UepResult {
  bool has_uep = true;
  std::optional<ExtensionInterval> witness;  // first basis element with a long interval
  std::vector<ExtensionInterval> intervals;  // every interval computed
};

struct MajorizingResult {
  bool found = false;
  StateFunctional state;  // best extension found, even when !found
  std::size_t atom = 0;   // index into decomposition.atoms
  double value = 0.0;     // ψ(a)
  double target = 0.0;    // θ(a)
  PureDecomposition decomposition;
};

/// Values of a functional on the basis of S, evaluated from a density.
Eigen::VectorXd functional_values(const StateFunctional& phi, const OperatorSubspace& s);

/// φ(I) = 1 and φ(s) ≥ −1e-8 for every density s ∈ S (one SDP). S must be unital.
bool verify_state_on_subspace(const Eigen::VectorXd& values, const OperatorSubspace& s,
                              const SdpConfig& config = {});

/// max = inf{φ(s) : s ∈ S, s ⪰ t}, min = sup{φ(s) : s ∈ S, s ⪯ t}.
ExtensionInterval extension_interval(const Eigen::VectorXd& values, const OperatorSubspace& s,
                                     const Hermitian& t, const MatrixStarAlgebra& ambient,
                                     const SdpConfig& config = {});
ExtensionInterval extension_interval(const StateFunctional& phi, const OperatorSubspace& s,
                                     const Hermitian& t, const MatrixStarAlgebra& ambient,
                                     const SdpConfig& config = {});

/// UEP of ψ|_S relative to the ambient algebra A: all extension intervals over
/// a hermitian basis of A have length ≤ 1e-6.
UepResult has_uep(const StateFunctional& psi, const OperatorSubspace& s,
                  const MatrixStarAlgebra& a, const SdpConfig& config = {});

/// GNS commutant of the state on A is one-dimensional.
bool is_pure(const StateFunctional& phi, const MatrixStarAlgebra& a);

/// Finite decomposition of φ|_A into pure states on A. Atom densities lie in
/// A and reproduce the compression of φ's density to A.
PureDecomposition pure_decomposition(const StateFunctional& phi, const MatrixStarAlgebra& a);

/// For θ on A with the UEP relative to B ⊂ A: a state ψ on A, pure on B,
/// with |ψ(a)| ≥ |θ(a)| − 1e-6, searched over extensions of the atoms of θ|_B.
/// found = false reports a failed search rather than throwing.
MajorizingResult find_pure_majorizing_state(const StateFunctional& theta, const Hermitian& a,
                                            const MatrixStarAlgebra& b,
                                            const MatrixStarAlgebra& ambient,
                                            bool verify_uep = true, const SdpConfig& config = {});

}  // namespace opsyslab
