#include "everett/measurement.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace everett {

namespace {

// Duplicate detection used for both alpha and beta spectra.
std::vector<std::pair<int, int>> close_pairs(const std::vector<double>& values, double gap) {
  std::vector<std::pair<int, int>> pairs;
  for (std::size_t i = 0; i < values.size(); ++i) {
    for (std::size_t j = i + 1; j < values.size(); ++j) {
      if (std::abs(values[i] - values[j]) <= gap) {
        pairs.emplace_back(static_cast<int>(i), static_cast<int>(j));
      }
    }
  }
  return pairs;
}

}  // namespace

const char* condition_name(Condition c) {
  switch (c) {
    case Condition::M1: return "M1";
    case Condition::M2: return "M2";
    case Condition::M3: return "M3";
    case Condition::M3prime: return "M3'";
    case Condition::M4: return "M4";
  }
  return "?";
}

SystemState::SystemState(ComplexVector amplitudes, double eq_tol) : psi(std::move(amplitudes)) {
  if (psi.space() != Space::S) throw DimensionMismatch("system state must be tagged S");
  if (!psi.is_normalized(eq_tol)) {
    throw NotNormalized("system state norm is " + std::to_string(psi.norm()));
  }
}

SystemState SystemState::uniform(int m) {
  if (m < 1) throw InvalidDimension("system dimension must be positive");
  ComplexVector v(Space::S, m);
  const double a = 1.0 / std::sqrt(static_cast<double>(m));
  for (int i = 0; i < m; ++i) v[i] = a;
  return SystemState(std::move(v));
}

ComplexVector MeasurementModel::o_ket(int i) const {
  return ComplexVector::unit(Space::O, dim_o, i);
}

ComplexVector MeasurementModel::s_ket(int branch) const {
  return ComplexVector::unit(Space::S, m, branch);
}

ComplexVector MeasurementModel::branch_ket(int branch) const {
  return kron(o_ket(branch + 1), s_ket(branch));
}

ComplexMatrix branch_generator(int m, int branch, double kappa) {
  if (m < 2) throw InvalidDimension("measurement model needs M >= 2");
  if (branch < 0 || branch >= m) throw DimensionMismatch("branch index out of range");
  if (!(kappa > 0.0) || !std::isfinite(kappa)) throw Error("kappa must be positive and finite");
  ComplexMatrix h(Space::O, m + 1);
  h.at(branch + 1, 0) = cplx(0.0, kappa);
  h.at(0, branch + 1) = cplx(0.0, -kappa);
  return h;
}

ComplexMatrix build_interaction_hamiltonian(int m, double kappa) {
  if (m < 2) throw InvalidDimension("measurement model needs M >= 2");
  if (!(kappa > 0.0) || !std::isfinite(kappa)) throw Error("kappa must be positive and finite");
  ComplexMatrix h(Space::OS, m * (m + 1));
  for (int b = 0; b < m; ++b) {
    const ComplexVector s = ComplexVector::unit(Space::S, m, b);
    h = h + kron(branch_generator(m, b, kappa), ComplexMatrix::outer(s, s));
  }
  return h;
}

MeasurementModel build_model(int m, double duration, std::vector<double> alpha,
                             std::vector<double> beta, Tolerances tol) {
  tol.validate();
  if (m < 2) throw InvalidDimension("measurement model needs M >= 2");
  if (!(duration > 0.0) || !std::isfinite(duration)) {
    throw Error("duration must be positive and finite");
  }
  if (alpha.empty()) {
    for (int i = 1; i <= m; ++i) alpha.push_back(static_cast<double>(i));
  }
  if (beta.empty()) {
    for (int i = 0; i <= m; ++i) beta.push_back(static_cast<double>(i));
  }
  if (static_cast<int>(alpha.size()) != m) {
    throw DimensionMismatch("alpha must list M pointer eigenvalues");
  }
  if (static_cast<int>(beta.size()) != m + 1) {
    throw DimensionMismatch("beta must list M+1 record eigenvalues");
  }
  if (auto pairs = close_pairs(alpha, tol.degeneracy_gap); !pairs.empty()) {
    throw DegenerateSpectrum("alpha values " + std::to_string(pairs.front().first) + " and " +
                             std::to_string(pairs.front().second) + " coincide");
  }
  if (auto pairs = close_pairs(beta, tol.degeneracy_gap); !pairs.empty()) {
    throw DegenerateSpectrum("beta values " + std::to_string(pairs.front().first) + " and " +
                             std::to_string(pairs.front().second) + " coincide");
  }

  MeasurementModel model{
      m, m + 1, 0, std::move(alpha), std::move(beta),
      (std::numbers::pi / 2.0) / duration, duration,
      ComplexMatrix(Space::OS, m * (m + 1)), {}, tol};
  model.u = unitary_exp(build_interaction_hamiltonian(m, model.kappa), duration);
  model.u_branches.reserve(static_cast<std::size_t>(m));
  for (int b = 0; b < m; ++b) {
    model.u_branches.push_back(unitary_exp(branch_generator(m, b, model.kappa), duration));
  }

  const ConditionReport m2 = verify_condition_M2(model);
  if (!m2.passed) {
    throw ConditionM2Violation("constructed unitary violates M2 with residual " +
                               std::to_string(m2.residual));
  }
  return model;
}

ConditionReport verify_condition_M2(const MeasurementModel& model) {
  ConditionReport report{Condition::M2, false, 0.0, model.tol.eq_tol, {}, {}};
  const ComplexVector ready = model.ready_ket();
  for (int b = 0; b < model.m; ++b) {
    const ComplexVector got = model.u * kron(ready, model.s_ket(b));
    const double r = (got - model.branch_ket(b)).norm();
    report.detail.push_back(r);
    report.residual = std::max(report.residual, r);
  }
  report.passed = report.residual <= report.tolerance;
  return report;
}

ConditionReport verify_condition_M4(const MeasurementModel& model, const ComplexMatrix& b) {
  if (b.space() != Space::O || b.dim() != model.dim_o) {
    throw DimensionMismatch("M4: record operator must act on the apparatus space");
  }
  ConditionReport report{Condition::M4, false, 0.0, model.tol.eq_tol, {}, {}};
  for (int i = 0; i < model.dim_o; ++i) {
    const ComplexVector ket = model.o_ket(i);
    const cplx beta_i = b.at(i, i);
    const double r = (b * ket - beta_i * ket).norm();
    report.detail.push_back(r);
    report.residual = std::max(report.residual, r);
  }
  for (int i = 0; i < model.dim_o; ++i) {
    for (int j = i + 1; j < model.dim_o; ++j) {
      const double gap = std::abs(b.at(i, i) - b.at(j, j));
      if (gap <= model.tol.degeneracy_gap) report.degenerate_pairs.emplace_back(i, j);
    }
  }
  // A record collision dominates the residual so that passed stays
  // equivalent to residual <= tolerance.
  if (!report.degenerate_pairs.empty()) {
    report.residual = std::max(report.residual, model.tol.degeneracy_gap);
  }
  report.passed = report.residual <= report.tolerance && report.degenerate_pairs.empty();
  return report;
}

ComplexVector evolve_composite(const MeasurementModel& model, const ComplexVector& v) {
  if (v.space() != Space::OS || v.dim() != model.u.dim()) {
    throw DimensionMismatch("evolve_composite: vector must live on the composite space");
  }
  return model.u * v;
}

ComplexVector schrodinger_evolve(const MeasurementModel& model, const SystemState& state) {
  if (state.m() != model.m) {
    throw DimensionMismatch("schrodinger_evolve: state dimension does not match the model");
  }
  if (!state.psi.is_normalized(model.tol.eq_tol)) {
    throw NotNormalized("schrodinger_evolve: state is not normalized");
  }
  return evolve_composite(model, kron(model.ready_ket(), state.psi));
}

BranchForm check_branch_form(const ComplexVector& psi_t, const MeasurementModel& model) {
  if (psi_t.space() != Space::OS || psi_t.dim() != model.u.dim()) {
    throw DimensionMismatch("check_branch_form: vector must live on the composite space");
  }
  if (!psi_t.is_normalized(model.tol.eq_tol)) {
    throw NotNormalized("check_branch_form: vector is not normalized");
  }
  BranchForm result;
  ComplexVector recon(Space::OS, psi_t.dim());
  double weight = 0.0;
  for (int b = 0; b < model.m; ++b) {
    const ComplexVector ket = model.branch_ket(b);
    const cplx c = inner(ket, psi_t);
    result.coefficients.push_back(c);
    recon = recon + c * ket;
    weight += std::norm(c);
  }
  result.residual = (psi_t - recon).norm();
  result.in_form = result.residual <= model.tol.eq_tol &&
                   std::abs(weight - 1.0) <= model.tol.eq_tol;
  if (!result.in_form) result.coefficients.clear();
  return result;
}

}  // namespace everett
