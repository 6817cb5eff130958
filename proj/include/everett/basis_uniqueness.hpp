#pragma once

// Schrodinger-picture basis uniqueness: the rotated-basis demonstration that
// condition M2 pins the measurement bases, a permutation/phase matcher for
// candidate bases, and a randomized falsification search for the uniqueness
// property.

#include <cstdint>
#include <optional>
#include <vector>

#include "everett/measurement.hpp"

namespace everett {

// Candidate primed bases for the system and apparatus spaces. Validity means
// each family is orthonormal and o_basis[0] equals the model's ready ket.
struct BasisPair {
  std::vector<ComplexVector> s_basis;  // M vectors on S
  std::vector<ComplexVector> o_basis;  // M+1 vectors on O, [0] = ready ket
};

// Throws Error naming the first violated requirement.
void validate_basis_pair(const BasisPair& bp, const MeasurementModel& model);

// The m=2 rotated pair: Hadamard combinations of the system and apparatus
// basis vectors, ready ket held fixed.
BasisPair hadamard_primed_bases(const MeasurementModel& model);

// Per-branch residuals of U(|O:0>|S':i>) = |O':i>|S':i>.
std::vector<double> verify_M2_for_basis(const MeasurementModel& model, const BasisPair& bp);

// Witness that a basis pair is a relabeling of the model bases:
// |S':i> = phases[i] |S:perm[i]>, |O':i> = |O:perm[i]+1> (0-based branches).
struct EquivalenceWitness {
  std::vector<int> permutation;
  std::vector<cplx> phases;  // unimodular, principal-branch arguments
};

// Scans overlap magnitudes for a phase-scaled permutation structure and
// returns the witness, or nothing when the structure is absent. Acceptance
// requires a dominant overlap above 1 - 1e-6 with all others below 1e-6.
std::optional<EquivalenceWitness> match_to_unprimed(const MeasurementModel& model,
                                                    const BasisPair& bp);

// Builds the pair a witness describes; used to generate adversarial inputs.
BasisPair apply_witness(const MeasurementModel& model, const EquivalenceWitness& witness);

// Haar-random S basis and Haar-random O basis on the complement of the ready
// ket, which itself is held exactly fixed.
BasisPair random_basis_pair(const MeasurementModel& model, Rng& rng);

struct BasisSearchResult {
  int trials = 0;
  int hypothesis_hits = 0;   // pairs satisfying the M2 relation within tol
  int counterexamples = 0;   // hypothesis hits that are not equivalent
};

// Draws random basis pairs and counts ones that satisfy the M2 relation
// within tol yet fail to match the model bases. The uniqueness property
// predicts zero.
BasisSearchResult random_basis_search(const MeasurementModel& model, int trials,
                                      std::uint64_t seed, double tol);

}  // namespace everett
