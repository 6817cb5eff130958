#pragma once

// Ideal measurement models: an apparatus of dimension M+1 with a ready state,
// the interaction Hamiltonian that correlates it with an M-dimensional
// system, Schrodinger-picture evolution, and verifiers for the measurement
// conditions M1-M4 with quantified residuals.

#include <utility>
#include <vector>

#include "everett/linalg.hpp"

namespace everett {

// Normalized system state sum_i psi_i |S:i>.
struct SystemState {
  ComplexVector psi;

  explicit SystemState(ComplexVector amplitudes, double eq_tol = 1e-10);
  static SystemState uniform(int m);

  int m() const { return psi.dim(); }
};

enum class Condition { M1, M2, M3, M3prime, M4 };

const char* condition_name(Condition c);

struct ConditionReport {
  Condition condition;
  bool passed = false;
  // Maximum per-index residual; for M4 a nondegeneracy shortfall
  // max(0, degeneracy_gap - min eigenvalue gap) folds into it so that
  // passed <=> residual <= tolerance.
  double residual = 0.0;
  double tolerance = 0.0;
  std::vector<double> detail;                       // per-index residuals
  std::vector<std::pair<int, int>> degenerate_pairs;  // offending index pairs (M4)
};

// An M-dimensional ideal measurement model. Built by build_model; fields are
// plain values and immutable by convention after construction.
struct MeasurementModel {
  int m = 0;            // system dimension M >= 2
  int dim_o = 0;        // apparatus dimension M+1
  int ready_index = 0;  // apparatus ready ("ignorant") basis index
  std::vector<double> alpha;  // M distinct pointer eigenvalues
  std::vector<double> beta;   // M+1 distinct record eigenvalues
  double kappa = 0.0;         // coupling (rad/time)
  double duration = 0.0;      // interaction time
  ComplexMatrix u;                        // correlating unitary on OS
  std::vector<ComplexMatrix> u_branches;  // per-branch apparatus unitaries on O
  Tolerances tol;

  ComplexVector o_ket(int i) const;       // |O:i>, i in 0..M
  ComplexVector s_ket(int branch) const;  // |S:i> for branch = i-1 in 0..M-1
  ComplexVector ready_ket() const { return o_ket(ready_index); }
  // |O:i> (x) |S:i> for branch = i-1.
  ComplexVector branch_ket(int branch) const;
};

// Apparatus-side generator for one branch: i*kappa(|O:i><O:0| - |O:0><O:i|)
// with i = branch+1.
ComplexMatrix branch_generator(int m, int branch, double kappa);

// H = sum_i h_i^O (x) |S:i><S:i| on the composite space, Hermitian by
// construction.
ComplexMatrix build_interaction_hamiltonian(int m, double kappa);

// Constructs the full model: kappa = pi/(2 duration), U = exp(-iH duration),
// branch unitaries, and an on-construction check of condition M2. Empty alpha
// or beta select the defaults 1..M and 0..M.
MeasurementModel build_model(int m, double duration, std::vector<double> alpha = {},
                             std::vector<double> beta = {}, Tolerances tol = {});

// Residual of U(|O:0>|S:i>) = |O:i>|S:i> over all branches.
ConditionReport verify_condition_M2(const MeasurementModel& model);

// Checks that b is diagonal in the apparatus basis with pairwise distinct
// eigenvalues, reading the record values off b itself.
ConditionReport verify_condition_M4(const MeasurementModel& model, const ComplexMatrix& b);

// U applied to an arbitrary composite vector (the unnormalized path).
ComplexVector evolve_composite(const MeasurementModel& model, const ComplexVector& v);

// U(|O:0> (x) |S;psi>).
ComplexVector schrodinger_evolve(const MeasurementModel& model, const SystemState& state);

struct BranchForm {
  bool in_form = false;
  std::vector<cplx> coefficients;  // branch amplitudes when in_form
  double residual = 0.0;           // distance to the closest branch-form vector
};

// Projects psi_t onto the branch kets and reports whether it is (within
// eq_tol) of the form sum_i c_i |O:i>|S:i> with unit total weight. A negative
// answer is a value, not an error.
BranchForm check_branch_form(const ComplexVector& psi_t, const MeasurementModel& model);

}  // namespace everett
