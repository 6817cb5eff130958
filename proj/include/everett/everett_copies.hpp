#pragma once

// Heisenberg-picture operator dynamics and Everett-copy structure: operator
// evolution, the closed-form branch decomposition used as an oracle, a
// detector that decides whether an arbitrary composite operator has the
// branch form sum_i b_i (x) P_i, permutation matching between decompositions,
// and the noncommuting-observable impossibility check.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "everett/measurement.hpp"

namespace everett {

struct OperatorProvenance {
  Space source_space = Space::OS;  // space of the source operator before embedding
  double duration = 0.0;
};

struct HeisenbergOperator {
  ComplexMatrix op;  // composite, dimension M(M+1)
  int m = 0;
  OperatorProvenance provenance;
};

struct EverettBranch {
  ComplexMatrix branch_op;      // apparatus-space operator b_i
  ComplexMatrix projector;      // rank-1 system projector P_i
  ComplexVector pointer_state;  // defining vector of the projector
  cplx record_value;            // eigenvalue of b_i on the ready state
};

struct EverettDecomposition {
  std::vector<EverettBranch> branches;
  double residual = 0.0;  // relative reconstruction residual
  bool canonical = false;

  // True when some pair of record values sits within gap of each other, in
  // which case the branches do not qualify as distinct copies.
  bool has_degenerate_records(double gap) const;
};

struct CopyVerdict {
  bool copy_form = false;
  EverettDecomposition decomposition;  // populated when copy_form
  double residual = 0.0;               // best-achieved reconstruction residual
  std::string reason;                  // empty when copy_form
};

// Embeds o on O or S as o (x) I or I (x) o and returns U^dag o U.
HeisenbergOperator evolve_operator(const MeasurementModel& model, const ComplexMatrix& o);

// The closed-form decomposition b_i = u_i^dag b u_i with the model's pointer
// projectors. Independent of the detector below; serves as its oracle.
EverettDecomposition closed_form_branches(const MeasurementModel& model, const ComplexMatrix& b);

// Decides membership in the branch form by simultaneous diagonalization of
// the apparatus-indexed blocks of B:
//   1. slice B into conditional blocks C[m][n];
//   2. mix them with seeded random complex weights and take the Hermitian
//      part G;
//   3. eigendecompose G, redrawing the weights while the spectrum is
//      degenerate (up to tol.max_retries);
//   4. require every block to be diagonal in the resulting basis within
//      tol.residual_tol, measured relative to |B|_F;
//   5. read the branch operators off the block diagonals and compute the
//      reconstruction residual;
//   6. require the ready vector to be an eigenvector of every branch
//      operator, with pairwise record-value gaps above tol.degeneracy_gap.
// Degenerate record values are a NotCopyForm verdict, not an error. A
// persistently degenerate mixture spectrum is only an error (RetriesExhausted)
// when the blocks also fail to diagonalize, i.e. when no verdict is forced.
CopyVerdict extract_copy_structure(const HeisenbergOperator& B, const ComplexVector& ready,
                                   const Tolerances& tol, std::uint64_t seed);

// Branches sorted by record value (real part, then imaginary part), each
// pointer state phased so its first nonzero component is real positive.
EverettDecomposition canonicalized(EverettDecomposition d);

// Bijection pi with d2.branches[i] matching d1.branches[pi[i]] within tol in
// both the projector and the branch operator, or nothing.
std::optional<std::vector<int>> permutation_equivalent(const EverettDecomposition& d1,
                                                       const EverettDecomposition& d2,
                                                       double tol);

struct ImpossibilityReport {
  bool applicable = false;     // extraction produced a copy form
  bool projector_match = false;  // extracted projectors equal the pointer projectors
  double commutator_norm = 0.0;
  std::string note;
};

// Evolves the record operator d, extracts its copy structure, checks the
// extracted projectors against the model's pointer projectors, and measures
// the commutator of a (diagonal in the pointer basis) with the observable
// rebuilt diagonally in the extracted basis.
ImpossibilityReport noncommuting_impossibility_check(const MeasurementModel& model,
                                                     const ComplexMatrix& a,
                                                     const ComplexMatrix& d,
                                                     std::uint64_t seed = 0);

// |<psi(t)| b (x) I |psi(t)> - <psi(t_in)| b(t) |psi(t_in)>|.
double expectation_consistency(const MeasurementModel& model, const ComplexMatrix& b,
                               const SystemState& state);

}  // namespace everett
