#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "everett/measurement.hpp"

using namespace everett;

namespace {

ComplexVector random_state_vector(int m, Rng& rng) {
  ComplexVector v(Space::S, m);
  double norm2 = 0.0;
  for (int i = 0; i < m; ++i) {
    v[i] = rng.complex_gaussian();
    norm2 += std::norm(v[i]);
  }
  const cplx scale{1.0 / std::sqrt(norm2), 0.0};
  return scale * v;
}

}  // namespace

TEST_CASE("interaction hamiltonian m=2 has the hand-expanded entries") {
  const double kappa = std::numbers::pi / 2.0;
  const ComplexMatrix h = build_interaction_hamiltonian(2, kappa);
  REQUIRE(h.dim() == 6);
  // Branch 1 couples composite (o=1,s=0) <-> (o=0,s=0): rows/cols 2 and 0.
  // Branch 2 couples (o=2,s=1) <-> (o=0,s=1): rows/cols 5 and 1.
  CHECK(h.at(2, 0) == cplx{0.0, kappa});
  CHECK(h.at(0, 2) == cplx{0.0, -kappa});
  CHECK(h.at(5, 1) == cplx{0.0, kappa});
  CHECK(h.at(1, 5) == cplx{0.0, -kappa});
  int nonzeros = 0;
  for (int r = 0; r < 6; ++r) {
    for (int c = 0; c < 6; ++c) {
      if (h.at(r, c) != cplx{}) ++nonzeros;
    }
  }
  CHECK(nonzeros == 4);
}

TEST_CASE("interaction hamiltonian is exactly hermitian") {
  for (int m : {2, 3, 5}) {
    const ComplexMatrix h = build_interaction_hamiltonian(m, 0.8);
    CHECK(frob_dist(h, h.adjoint()) == 0.0);
  }
}

TEST_CASE("interaction hamiltonian couples only ready and branch rows") {
  const int m = 3;
  const ComplexMatrix h = build_interaction_hamiltonian(m, 1.3);
  for (int r = 0; r < h.dim(); ++r) {
    for (int c = 0; c < h.dim(); ++c) {
      if (h.at(r, c) == cplx{}) continue;
      const int ro = r / m, rs = r % m;
      const int co = c / m, cs = c % m;
      CHECK(rs == cs);
      const int branch_o = rs + 1;
      const bool couples_ready = (ro == 0 && co == branch_o) || (ro == branch_o && co == 0);
      CHECK(couples_ready);
    }
  }
}

TEST_CASE("build_model sets kappa from the duration") {
  const MeasurementModel m1 = build_model(2, 1.0);
  CHECK(m1.kappa == doctest::Approx(std::numbers::pi / 2.0).epsilon(1e-15));
  CHECK(std::abs(m1.kappa * m1.duration - std::numbers::pi / 2.0) <= 1e-14);

  const MeasurementModel m2 = build_model(2, 2.0);
  CHECK(m2.kappa == doctest::Approx(std::numbers::pi / 4.0).epsilon(1e-15));
  CHECK(verify_condition_M2(m2).passed);

  const MeasurementModel m3 = build_model(3, 0.5);
  CHECK(std::abs(m3.kappa * m3.duration - std::numbers::pi / 2.0) <= 1e-14);
}

TEST_CASE("branch unitaries map the ready ket to the record kets") {
  for (int m : {2, 3}) {
    const MeasurementModel model = build_model(m, 1.0);
    for (int b = 0; b < m; ++b) {
      const ComplexVector got =
          model.u_branches[static_cast<std::size_t>(b)] * model.ready_ket();
      CHECK((got - model.o_ket(b + 1)).norm() <= 1e-10);
    }
  }
}

TEST_CASE("build_model rejects invalid inputs") {
  CHECK_THROWS_AS((void)build_model(1, 1.0), InvalidDimension);
  CHECK_THROWS_AS((void)build_model(2, 0.0), Error);
  CHECK_THROWS_AS((void)build_model(2, 1.0, {1.0, 1.0}, {}), DegenerateSpectrum);
  CHECK_THROWS_AS((void)build_model(2, 1.0, {}, {0.0, 1.0, 1.0}), DegenerateSpectrum);
  CHECK_THROWS_AS((void)build_model(2, 1.0, {1.0, 2.0, 3.0}, {}), DimensionMismatch);
  CHECK_THROWS_AS((void)build_model(2, 1.0, {}, {0.0, 1.0}), DimensionMismatch);
}

TEST_CASE("M2 report on a fresh model") {
  const MeasurementModel model = build_model(2, 1.0);
  const ConditionReport report = verify_condition_M2(model);
  CHECK(report.passed);
  CHECK(report.residual <= 1e-10);
  CHECK(report.detail.size() == 2);
}

TEST_CASE("M2 report with the identity evolution") {
  MeasurementModel model = build_model(2, 1.0);
  model.u = ComplexMatrix::identity(Space::OS, 6);
  const ConditionReport report = verify_condition_M2(model);
  CHECK_FALSE(report.passed);
  // |O:0>|S:i> and |O:i>|S:i> are orthogonal unit vectors.
  CHECK(report.residual == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
}

TEST_CASE("M2 report with swapped record kets") {
  MeasurementModel model = build_model(2, 1.0);
  ComplexMatrix swap(Space::O, 3);
  swap.at(0, 0) = 1.0;
  swap.at(1, 2) = 1.0;
  swap.at(2, 1) = 1.0;
  model.u = kron(swap, ComplexMatrix::identity(Space::S, 2)) * model.u;
  const ConditionReport report = verify_condition_M2(model);
  CHECK_FALSE(report.passed);
  REQUIRE(report.detail.size() == 2);
  for (double r : report.detail) {
    CHECK(r == doctest::Approx(std::sqrt(2.0)).epsilon(1e-10));
  }
}

TEST_CASE("schrodinger evolution lands on the branch kets") {
  const MeasurementModel model = build_model(2, 1.0);
  const ComplexVector single =
      schrodinger_evolve(model, SystemState(ComplexVector(Space::S, {cplx{1.0, 0.0}, cplx{}})));
  CHECK((single - model.branch_ket(0)).norm() <= 1e-10);

  const ComplexVector balanced = schrodinger_evolve(model, SystemState::uniform(2));
  const cplx h{1.0 / std::sqrt(2.0), 0.0};
  CHECK((balanced - (h * (model.branch_ket(0) + model.branch_ket(1)))).norm() <= 1e-10);
}

TEST_CASE("schrodinger evolution recovers random amplitudes by projection") {
  const MeasurementModel model = build_model(3, 1.0);
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const SystemState state(random_state_vector(3, rng));
    const ComplexVector psi_t = schrodinger_evolve(model, state);
    for (int b = 0; b < 3; ++b) {
      CHECK(std::abs(inner(model.branch_ket(b), psi_t) - state.psi[b]) <= 1e-10);
    }
  }
}

TEST_CASE("states must be normalized and dimension-consistent") {
  CHECK_THROWS_AS(SystemState(ComplexVector(Space::S, {cplx{0.5, 0.0}, cplx{}})), NotNormalized);
  const MeasurementModel model = build_model(2, 1.0);
  CHECK_THROWS_AS((void)schrodinger_evolve(model, SystemState::uniform(3)), DimensionMismatch);
}

TEST_CASE("evolution is linear and norm preserving") {
  const MeasurementModel model = build_model(2, 1.0);
  Rng rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    ComplexVector v(Space::OS, 6), w(Space::OS, 6);
    for (int i = 0; i < 6; ++i) {
      v[i] = rng.complex_gaussian();
      w[i] = rng.complex_gaussian();
    }
    const cplx a = rng.complex_gaussian();
    const cplx b = rng.complex_gaussian();
    const ComplexVector lhs = evolve_composite(model, a * v + b * w);
    const ComplexVector rhs = a * evolve_composite(model, v) + b * evolve_composite(model, w);
    CHECK((lhs - rhs).norm() <= 1e-10);
  }
  const ComplexVector evolved = schrodinger_evolve(model, SystemState::uniform(2));
  CHECK(std::abs(evolved.norm() - 1.0) <= 1e-10);
}

TEST_CASE("branch form round trip") {
  const MeasurementModel model = build_model(2, 1.0);
  Rng rng(9);
  const SystemState state(random_state_vector(2, rng));
  const BranchForm form = check_branch_form(schrodinger_evolve(model, state), model);
  REQUIRE(form.in_form);
  for (int b = 0; b < 2; ++b) {
    CHECK(std::abs(form.coefficients[static_cast<std::size_t>(b)] - state.psi[b]) <= 1e-10);
  }
}

TEST_CASE("a ready-state component is not branch form") {
  const MeasurementModel model = build_model(2, 1.0);
  // |O:0> (x) |S:1> sits at composite index 0 and overlaps no branch ket.
  const ComplexVector v = ComplexVector::unit(Space::OS, 6, 0);
  const BranchForm form = check_branch_form(v, model);
  CHECK_FALSE(form.in_form);
  CHECK(form.coefficients.empty());
  CHECK(form.residual == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("the balanced state keeps balanced branch coefficients") {
  const MeasurementModel model = build_model(2, 1.0);
  const BranchForm form =
      check_branch_form(schrodinger_evolve(model, SystemState::uniform(2)), model);
  REQUIRE(form.in_form);
  for (const cplx& c : form.coefficients) {
    CHECK(std::abs(c - cplx{1.0 / std::sqrt(2.0), 0.0}) <= 1e-12);
  }
}

TEST_CASE("M4 accepts a nondegenerate diagonal record operator") {
  const MeasurementModel model = build_model(2, 1.0);
  const ComplexMatrix b =
      ComplexMatrix::diagonal(Space::O, {cplx{0.0, 0.0}, cplx{1.5, 0.0}, cplx{-2.0, 0.0}});
  const ConditionReport report = verify_condition_M4(model, b);
  CHECK(report.passed);
  CHECK(report.degenerate_pairs.empty());
}

TEST_CASE("M4 rejects the identity as fully degenerate") {
  const MeasurementModel model = build_model(2, 1.0);
  const ConditionReport report =
      verify_condition_M4(model, ComplexMatrix::identity(Space::O, 3));
  CHECK_FALSE(report.passed);
  CHECK(report.degenerate_pairs.size() == 3);
}

TEST_CASE("M4 reports the degenerate pair") {
  const MeasurementModel model = build_model(2, 1.0);
  const ComplexMatrix b =
      ComplexMatrix::diagonal(Space::O, {cplx{0.0, 0.0}, cplx{3.0, 0.0}, cplx{3.0, 0.0}});
  const ConditionReport report = verify_condition_M4(model, b);
  CHECK_FALSE(report.passed);
  REQUIRE(report.degenerate_pairs.size() == 1);
  CHECK(report.degenerate_pairs[0].first == 1);
  CHECK(report.degenerate_pairs[0].second == 2);
}

TEST_CASE("M4 flags an off-diagonal record operator") {
  const MeasurementModel model = build_model(2, 1.0);
  ComplexMatrix b =
      ComplexMatrix::diagonal(Space::O, {cplx{0.0, 0.0}, cplx{1.0, 0.0}, cplx{2.0, 0.0}});
  b.at(0, 1) = 0.3;
  b.at(1, 0) = 0.3;
  const ConditionReport report = verify_condition_M4(model, b);
  CHECK_FALSE(report.passed);
  CHECK(report.residual >= 0.3);
}

TEST_CASE("branch form recovery across dimensions") {
  for (int m : {2, 3, 4, 6}) {
    const MeasurementModel model = build_model(m, 1.0);
    Rng rng(static_cast<std::uint64_t>(100 + m));
    for (int trial = 0; trial < 10; ++trial) {
      const SystemState state(random_state_vector(m, rng));
      const BranchForm form = check_branch_form(schrodinger_evolve(model, state), model);
      REQUIRE(form.in_form);
      for (int b = 0; b < m; ++b) {
        CHECK(std::abs(form.coefficients[static_cast<std::size_t>(b)] - state.psi[b]) <= 1e-10);
      }
    }
  }
}
