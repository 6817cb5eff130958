#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "everett/everett_copies.hpp"

using namespace everett;

namespace {

ComplexMatrix random_hermitian(Space space, int n, Rng& rng) {
  ComplexMatrix g(space, n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) g.at(r, c) = rng.complex_gaussian();
  }
  return cplx{0.5, 0.0} * (g + g.adjoint());
}

ComplexMatrix record_diag(const std::vector<double>& values) {
  return ComplexMatrix::diagonal(Space::O, std::vector<cplx>(values.begin(), values.end()));
}

// Hollow all-ones flip, the generic symmetric off-diagonal perturbation.
ComplexMatrix hollow_flip(Space space, int n) {
  ComplexMatrix x(space, n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      if (r != c) x.at(r, c) = 1.0;
    }
  }
  return x;
}

// Independent oracle: relative off-diagonal mass of the conditional blocks in
// the fixed pointer basis, by direct index arithmetic.
double pointer_basis_offdiag_mass(const ComplexMatrix& composite, int m) {
  double off = 0.0;
  for (int r = 0; r < composite.dim(); ++r) {
    for (int c = 0; c < composite.dim(); ++c) {
      if (r % m != c % m) off += std::norm(composite.at(r, c));
    }
  }
  return std::sqrt(off) / composite.frobenius_norm();
}

// Explicit reassembly of a decomposition, used as the reconstruction oracle.
ComplexMatrix reassemble(const EverettDecomposition& d) {
  const int m = d.branches.front().projector.dim();
  ComplexMatrix out(Space::OS, m * (m + 1));
  for (const EverettBranch& b : d.branches) out = out + kron(b.branch_op, b.projector);
  return out;
}

std::vector<double> sorted_real_records(const EverettDecomposition& d) {
  std::vector<double> out;
  for (const EverettBranch& b : d.branches) out.push_back(b.record_value.real());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("evolving the identity returns the identity") {
  const MeasurementModel model = build_model(2, 1.0);
  const HeisenbergOperator evolved =
      evolve_operator(model, ComplexMatrix::identity(Space::OS, 6));
  CHECK(frob_dist(evolved.op, ComplexMatrix::identity(Space::OS, 6)) <= 1e-12);
}

TEST_CASE("heisenberg evolution preserves spectra") {
  const MeasurementModel model = build_model(3, 1.0);
  Rng rng(3);
  const ComplexMatrix o = random_hermitian(Space::O, 4, rng);
  const Eigensystem before = hermitian_eig(kron(o, ComplexMatrix::identity(Space::S, 3)));
  const Eigensystem after = hermitian_eig(evolve_operator(model, o).op);
  REQUIRE(before.values.size() == after.values.size());
  for (std::size_t i = 0; i < before.values.size(); ++i) {
    CHECK(std::abs(before.values[i] - after.values[i]) <= 1e-10);
  }
}

TEST_CASE("closed form branches satisfy the record eigenvalue relation") {
  const MeasurementModel model = build_model(2, 1.0);
  const EverettDecomposition d = closed_form_branches(model, record_diag({0.0, 1.0, 2.0}));
  REQUIRE(d.branches.size() == 2);
  const ComplexVector ready = model.ready_ket();
  CHECK((d.branches[0].branch_op * ready - cplx{1.0, 0.0} * ready).norm() <= 1e-10);
  CHECK((d.branches[1].branch_op * ready - cplx{2.0, 0.0} * ready).norm() <= 1e-10);
  CHECK(std::abs(d.branches[0].record_value - cplx{1.0, 0.0}) <= 1e-10);
  CHECK(std::abs(d.branches[1].record_value - cplx{2.0, 0.0}) <= 1e-10);
}

TEST_CASE("closed form reconstruction matches the evolved operator") {
  const MeasurementModel model = build_model(2, 1.0);
  const ComplexMatrix b = record_diag({0.0, 1.0, 2.0});
  const EverettDecomposition d = closed_form_branches(model, b);
  CHECK(d.residual <= 1e-10);
  const HeisenbergOperator evolved = evolve_operator(model, b);
  CHECK(frob_dist(reassemble(d), evolved.op) <= 1e-10);
}

TEST_CASE("closed form of the identity record operator is flat and degenerate") {
  const MeasurementModel model = build_model(2, 1.0);
  const EverettDecomposition d =
      closed_form_branches(model, ComplexMatrix::identity(Space::O, 3));
  for (const EverettBranch& b : d.branches) {
    CHECK(frob_dist(b.branch_op, ComplexMatrix::identity(Space::O, 3)) <= 1e-12);
    CHECK(std::abs(b.record_value - cplx{1.0, 0.0}) <= 1e-12);
  }
  CHECK(d.has_degenerate_records(model.tol.degeneracy_gap));
  CHECK_FALSE(closed_form_branches(model, record_diag({0.0, 1.0, 2.0}))
                  .has_degenerate_records(model.tol.degeneracy_gap));
}

TEST_CASE("extraction matches the closed form oracle") {
  const MeasurementModel model = build_model(2, 1.0);
  const ComplexMatrix b = record_diag({0.0, 1.0, 2.0});
  const HeisenbergOperator evolved = evolve_operator(model, b);
  const CopyVerdict verdict = extract_copy_structure(evolved, model.ready_ket(), model.tol, 0);
  REQUIRE(verdict.copy_form);
  CHECK(verdict.residual <= 1e-10);
  const std::vector<double> records = sorted_real_records(verdict.decomposition);
  CHECK(records[0] == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(records[1] == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(permutation_equivalent(closed_form_branches(model, b), verdict.decomposition, 1e-8)
            .has_value());
}

TEST_CASE("extraction soundness invariants") {
  const MeasurementModel model = build_model(3, 1.0);
  const ComplexMatrix b = record_diag({0.3, -1.2, 2.5, 0.9});
  const CopyVerdict verdict =
      extract_copy_structure(evolve_operator(model, b), model.ready_ket(), model.tol, 5);
  REQUIRE(verdict.copy_form);
  const EverettDecomposition& d = verdict.decomposition;
  ComplexMatrix projector_sum(Space::S, 3);
  for (const EverettBranch& branch : d.branches) {
    CHECK(branch.projector.is_projector(model.tol.eq_tol));
    projector_sum = projector_sum + branch.projector;
    CHECK((branch.branch_op * model.ready_ket() -
           branch.record_value * model.ready_ket()).norm() <= 1e-8);
  }
  CHECK(frob_dist(projector_sum, ComplexMatrix::identity(Space::S, 3)) <= model.tol.eq_tol);
  for (std::size_t i = 0; i < d.branches.size(); ++i) {
    for (std::size_t j = i + 1; j < d.branches.size(); ++j) {
      CHECK(frob_dist(d.branches[i].projector * d.branches[j].projector,
                      ComplexMatrix(Space::S, 3)) <= model.tol.eq_tol);
      CHECK(std::abs(d.branches[i].record_value - d.branches[j].record_value) >
            model.tol.degeneracy_gap);
    }
  }
  CHECK(frob_dist(reassemble(d), evolve_operator(model, b).op) /
            evolve_operator(model, b).op.frobenius_norm() <=
        model.tol.residual_tol);
}

TEST_CASE("the identity composite is not copy form") {
  const MeasurementModel model = build_model(2, 1.0);
  const HeisenbergOperator b{ComplexMatrix::identity(Space::OS, 6), 2,
                             OperatorProvenance{Space::OS, 0.0}};
  const CopyVerdict verdict = extract_copy_structure(b, model.ready_ket(), model.tol, 0);
  CHECK_FALSE(verdict.copy_form);
  CHECK(verdict.reason.find("degenerate") != std::string::npos);
}

TEST_CASE("a generic coupling flips the verdict") {
  const MeasurementModel model = build_model(2, 1.0);
  const HeisenbergOperator evolved = evolve_operator(model, record_diag({0.0, 1.0, 2.0}));
  const ComplexMatrix coupling = kron(hollow_flip(Space::O, 3), hollow_flip(Space::S, 2));
  const ComplexMatrix perturbed_op = evolved.op + cplx{0.3, 0.0} * coupling;
  const HeisenbergOperator perturbed{perturbed_op, 2, OperatorProvenance{Space::OS, 0.0}};

  // The coupling is entirely off-diagonal in the pointer basis, so the
  // index-arithmetic oracle lower-bounds any reported residual.
  const double oracle = pointer_basis_offdiag_mass(perturbed_op, 2);
  CHECK(oracle > 0.1);

  const CopyVerdict verdict =
      extract_copy_structure(perturbed, model.ready_ket(), model.tol, 0);
  CHECK_FALSE(verdict.copy_form);
  CHECK(verdict.residual > 0.1);
  CHECK(verdict.residual >= 0.9 * oracle);

  const CopyVerdict again = extract_copy_structure(perturbed, model.ready_ket(), model.tol, 0);
  CHECK(again.residual == verdict.residual);
}

TEST_CASE("extraction finds a rotated pointer basis") {
  // Conjugating by I (x) W turns the branch projectors into rotated rank-1
  // projectors, so the detector has to find a basis that is not the storage
  // basis.
  for (int m : {2, 3, 4}) {
    const MeasurementModel model = build_model(m, 1.0);
    std::vector<double> beta;
    for (int i = 0; i <= m; ++i) beta.push_back(static_cast<double>(i));
    const HeisenbergOperator evolved = evolve_operator(model, record_diag(beta));
    const ComplexMatrix w = haar_random_unitary(m, static_cast<std::uint64_t>(m), Space::S);
    const ComplexMatrix rot = kron(ComplexMatrix::identity(Space::O, m + 1), w);
    const HeisenbergOperator rotated{rot.adjoint() * evolved.op * rot, m,
                                     OperatorProvenance{Space::OS, 1.0}};
    const CopyVerdict verdict =
        extract_copy_structure(rotated, model.ready_ket(), model.tol, 7);
    REQUIRE(verdict.copy_form);
    CHECK(verdict.residual <= 1e-12);
    // Records are unchanged by the conjugation; projectors become W^dag P W.
    const std::vector<double> records = sorted_real_records(verdict.decomposition);
    for (int i = 0; i < m; ++i) {
      CHECK(records[static_cast<std::size_t>(i)] ==
            doctest::Approx(static_cast<double>(i + 1)).epsilon(1e-10));
    }
    for (const EverettBranch& branch : verdict.decomposition.branches) {
      const int index = static_cast<int>(std::lround(branch.record_value.real())) - 1;
      const ComplexVector expected_pointer = w.adjoint() * model.s_ket(index);
      CHECK(frob_dist(branch.projector,
                      ComplexMatrix::outer(expected_pointer, expected_pointer)) <= 1e-10);
    }
    CHECK(frob_dist(reassemble(verdict.decomposition), rotated.op) <= 1e-10);
  }
}

TEST_CASE("extraction is seed independent up to permutation") {
  for (int m : {2, 3}) {
    const MeasurementModel model = build_model(m, 1.0);
    Rng rng(static_cast<std::uint64_t>(m));
    std::vector<double> beta;
    for (int i = 0; i <= m; ++i) beta.push_back(static_cast<double>(i) + 0.3 * rng.uniform());
    const HeisenbergOperator evolved = evolve_operator(model, record_diag(beta));
    const CopyVerdict v1 = extract_copy_structure(evolved, model.ready_ket(), model.tol, 17);
    const CopyVerdict v2 = extract_copy_structure(evolved, model.ready_ket(), model.tol, 91);
    REQUIRE(v1.copy_form);
    REQUIRE(v2.copy_form);
    CHECK(permutation_equivalent(v1.decomposition, v2.decomposition, 1e-8).has_value());
  }
}

TEST_CASE("permutation matching basics") {
  const MeasurementModel model = build_model(3, 1.0);
  const EverettDecomposition d = closed_form_branches(model, record_diag({0.0, 1.0, 2.0, 3.0}));
  const auto identity = permutation_equivalent(d, d, 1e-10);
  REQUIRE(identity.has_value());
  CHECK(*identity == std::vector<int>{0, 1, 2});

  EverettDecomposition reversed = d;
  std::reverse(reversed.branches.begin(), reversed.branches.end());
  const auto rev = permutation_equivalent(d, reversed, 1e-10);
  REQUIRE(rev.has_value());
  CHECK(*rev == std::vector<int>{2, 1, 0});

  const EverettDecomposition other = closed_form_branches(model, record_diag({0.0, 5.0, 6.0, 7.0}));
  CHECK_FALSE(permutation_equivalent(d, other, 1e-10).has_value());
}

TEST_CASE("canonical form is idempotent and seed independent") {
  const MeasurementModel model = build_model(3, 1.0);
  const HeisenbergOperator evolved =
      evolve_operator(model, record_diag({0.5, -2.0, 1.0, 4.0}));
  const CopyVerdict v1 = extract_copy_structure(evolved, model.ready_ket(), model.tol, 1);
  const CopyVerdict v2 = extract_copy_structure(evolved, model.ready_ket(), model.tol, 2);
  REQUIRE(v1.copy_form);
  REQUIRE(v2.copy_form);
  CHECK(v1.decomposition.canonical);

  const EverettDecomposition twice = canonicalized(v1.decomposition);
  for (std::size_t i = 0; i < twice.branches.size(); ++i) {
    CHECK(twice.branches[i].record_value == v1.decomposition.branches[i].record_value);
    CHECK(twice.branches[i].pointer_state == v1.decomposition.branches[i].pointer_state);
  }

  // Same branch order and data regardless of the mixing seed.
  REQUIRE(v1.decomposition.branches.size() == v2.decomposition.branches.size());
  for (std::size_t i = 0; i < v1.decomposition.branches.size(); ++i) {
    CHECK(std::abs(v1.decomposition.branches[i].record_value -
                   v2.decomposition.branches[i].record_value) <= 1e-10);
    CHECK(frob_dist(v1.decomposition.branches[i].projector,
                    v2.decomposition.branches[i].projector) <= 1e-8);
    CHECK((v1.decomposition.branches[i].pointer_state -
           v2.decomposition.branches[i].pointer_state).norm() <= 1e-8);
  }
}

TEST_CASE("impossibility check on a valid record operator") {
  const MeasurementModel model = build_model(2, 1.0, {0.7, -1.1});
  std::vector<cplx> alpha_diag(model.alpha.begin(), model.alpha.end());
  const ComplexMatrix a = ComplexMatrix::diagonal(Space::S, alpha_diag);
  const ImpossibilityReport report =
      noncommuting_impossibility_check(model, a, record_diag({0.0, 1.0, 2.0}));
  CHECK(report.applicable);
  CHECK(report.projector_match);
  CHECK(report.commutator_norm <= 1e-10);
}

TEST_CASE("a rotated observable exhibits the forbidden commutator") {
  // Hand-built contrast case: diag(1,2) against the same spectrum laid out
  // along the Hadamard-rotated projectors. The commutator norm is 1/sqrt(2).
  const ComplexMatrix a = ComplexMatrix::diagonal(Space::S, {cplx{1.0, 0.0}, cplx{2.0, 0.0}});
  ComplexMatrix a_rot(Space::S, 2);
  a_rot.at(0, 0) = 1.5;
  a_rot.at(1, 1) = 1.5;
  a_rot.at(0, 1) = -0.5;
  a_rot.at(1, 0) = -0.5;
  const double comm = frob_dist(a * a_rot, a_rot * a);
  CHECK(comm == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(comm > 0.1);
}

TEST_CASE("the identity record operator is inapplicable") {
  const MeasurementModel model = build_model(2, 1.0);
  std::vector<cplx> alpha_diag(model.alpha.begin(), model.alpha.end());
  const ComplexMatrix a = ComplexMatrix::diagonal(Space::S, alpha_diag);
  const ImpossibilityReport report =
      noncommuting_impossibility_check(model, a, ComplexMatrix::identity(Space::O, 3));
  CHECK_FALSE(report.applicable);
  CHECK_FALSE(report.projector_match);
  CHECK_FALSE(report.note.empty());
}

TEST_CASE("impossibility check validates the observable") {
  const MeasurementModel model = build_model(2, 1.0);
  ComplexMatrix off(Space::S, 2);
  off.at(0, 1) = 1.0;
  off.at(1, 0) = 1.0;
  CHECK_THROWS_AS(
      (void)noncommuting_impossibility_check(model, off, record_diag({0.0, 1.0, 2.0})), Error);
  const ComplexMatrix degenerate = ComplexMatrix::identity(Space::S, 2);
  CHECK_THROWS_AS(
      (void)noncommuting_impossibility_check(model, degenerate, record_diag({0.0, 1.0, 2.0})),
      DegenerateSpectrum);
}

TEST_CASE("expectations agree between pictures on the worked case") {
  const MeasurementModel model = build_model(2, 1.0);
  const ComplexMatrix b = record_diag({0.0, 1.0, 2.0});
  const SystemState state = SystemState::uniform(2);

  // Both sides equal (1 + 2) / 2.
  const ComplexVector psi_t = schrodinger_evolve(model, state);
  const cplx schrodinger_side =
      inner(psi_t, kron(b, ComplexMatrix::identity(Space::S, 2)) * psi_t);
  CHECK(std::abs(schrodinger_side - cplx{1.5, 0.0}) <= 1e-10);

  const ComplexVector psi_in = kron(model.ready_ket(), state.psi);
  const cplx heisenberg_side = inner(psi_in, evolve_operator(model, b).op * psi_in);
  CHECK(std::abs(heisenberg_side - cplx{1.5, 0.0}) <= 1e-10);

  CHECK(expectation_consistency(model, b, state) <= 1e-10);
}

TEST_CASE("a single-branch state reads out its record value") {
  const MeasurementModel model = build_model(2, 1.0);
  const ComplexMatrix b = record_diag({0.0, 1.0, 2.0});
  const SystemState state(ComplexVector(Space::S, {cplx{1.0, 0.0}, cplx{}}));
  const ComplexVector psi_t = schrodinger_evolve(model, state);
  const cplx value = inner(psi_t, kron(b, ComplexMatrix::identity(Space::S, 2)) * psi_t);
  CHECK(std::abs(value - cplx{1.0, 0.0}) <= 1e-10);
  CHECK(expectation_consistency(model, b, state) <= 1e-10);
}

TEST_CASE("expectation consistency over random draws") {
  Rng rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const int m = 2 + rng.uniform_int(3);
    const MeasurementModel model = build_model(m, 1.0);
    ComplexVector amplitudes(Space::S, m);
    double norm2 = 0.0;
    for (int i = 0; i < m; ++i) {
      amplitudes[i] = rng.complex_gaussian();
      norm2 += std::norm(amplitudes[i]);
    }
    const SystemState state(cplx{1.0 / std::sqrt(norm2), 0.0} * amplitudes);
    const ComplexMatrix b = random_hermitian(Space::O, m + 1, rng);
    CHECK(expectation_consistency(model, b, state) <= 1e-10);
  }
}
