#include "everett/everett_copies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace everett {

namespace {

// Components smaller than this are treated as zero when picking the phase
// anchor of a pointer state; unit vectors of the dimensions handled here
// always carry a component far above it.
constexpr double kPhaseAnchorFloor = 1e-7;

ComplexVector phase_fixed(ComplexVector v) {
  for (int i = 0; i < v.dim(); ++i) {
    const double mag = std::abs(v[i]);
    if (mag > kPhaseAnchorFloor) {
      const cplx rot = std::conj(v[i]) / mag;
      return rot * v;
    }
  }
  return v;
}

double min_pairwise_gap(const std::vector<cplx>& values) {
  double min_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < values.size(); ++i) {
    for (std::size_t j = i + 1; j < values.size(); ++j) {
      min_gap = std::min(min_gap, std::abs(values[i] - values[j]));
    }
  }
  return min_gap;
}

}  // namespace

bool EverettDecomposition::has_degenerate_records(double gap) const {
  for (std::size_t i = 0; i < branches.size(); ++i) {
    for (std::size_t j = i + 1; j < branches.size(); ++j) {
      if (std::abs(branches[i].record_value - branches[j].record_value) <= gap) return true;
    }
  }
  return false;
}

HeisenbergOperator evolve_operator(const MeasurementModel& model, const ComplexMatrix& o) {
  ComplexMatrix embedded(Space::OS, model.m * model.dim_o);
  switch (o.space()) {
    case Space::O:
      if (o.dim() != model.dim_o) {
        throw DimensionMismatch("evolve_operator: apparatus operator has wrong dimension");
      }
      embedded = kron(o, ComplexMatrix::identity(Space::S, model.m));
      break;
    case Space::S:
      if (o.dim() != model.m) {
        throw DimensionMismatch("evolve_operator: system operator has wrong dimension");
      }
      embedded = kron(ComplexMatrix::identity(Space::O, model.dim_o), o);
      break;
    case Space::OS:
      if (o.dim() != model.m * model.dim_o) {
        throw DimensionMismatch("evolve_operator: composite operator has wrong dimension");
      }
      embedded = o;
      break;
  }
  return HeisenbergOperator{model.u.adjoint() * embedded * model.u, model.m,
                            OperatorProvenance{o.space(), model.duration}};
}

EverettDecomposition closed_form_branches(const MeasurementModel& model, const ComplexMatrix& b) {
  if (b.space() != Space::O || b.dim() != model.dim_o) {
    throw DimensionMismatch("closed_form_branches: operator must act on the apparatus space");
  }
  EverettDecomposition d;
  ComplexMatrix recon(Space::OS, model.m * model.dim_o);
  for (int i = 0; i < model.m; ++i) {
    const ComplexMatrix& ui = model.u_branches[static_cast<std::size_t>(i)];
    ComplexMatrix branch_op = ui.adjoint() * b * ui;
    const ComplexVector pointer = model.s_ket(i);
    ComplexMatrix projector = ComplexMatrix::outer(pointer, pointer);
    const cplx record = branch_op.at(model.ready_index, model.ready_index);
    recon = recon + kron(branch_op, projector);
    d.branches.push_back(
        EverettBranch{std::move(branch_op), std::move(projector), pointer, record});
  }
  const HeisenbergOperator evolved = evolve_operator(model, b);
  const double scale = evolved.op.frobenius_norm();
  d.residual = scale > 0.0 ? frob_dist(evolved.op, recon) / scale : frob_dist(evolved.op, recon);
  return d;
}

CopyVerdict extract_copy_structure(const HeisenbergOperator& B, const ComplexVector& ready,
                                   const Tolerances& tol, std::uint64_t seed) {
  tol.validate();
  if (ready.space() != Space::O) {
    throw DimensionMismatch("extract_copy_structure: ready vector must be tagged O");
  }
  const int dim_o = ready.dim();
  const int m = dim_o - 1;
  if (m < 1 || B.op.space() != Space::OS || B.op.dim() != m * dim_o) {
    throw DimensionMismatch("extract_copy_structure: operator dimension " +
                            std::to_string(B.op.dim()) + " does not match ready vector");
  }
  if (!ready.is_normalized(tol.eq_tol)) {
    throw NotNormalized("extract_copy_structure: ready vector is not normalized");
  }

  const double norm_b = B.op.frobenius_norm();
  if (norm_b == 0.0) {
    return CopyVerdict{false, {}, 0.0, "zero operator has no nondegenerate record values"};
  }
  const auto blocks = conditional_blocks(B.op);

  // A generic mixture of the blocks shares the common eigenbasis whenever one
  // exists; redraw while its spectrum is too degenerate to pin the basis.
  Eigensystem eig{std::vector<double>{}, ComplexMatrix(Space::S, m)};
  bool basis_pinned = false;
  for (int attempt = 0; attempt <= tol.max_retries && !basis_pinned; ++attempt) {
    Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(attempt)));
    ComplexMatrix x(Space::S, m);
    for (int bo = 0; bo <= m; ++bo) {
      for (int bc = 0; bc <= m; ++bc) {
        const cplx w = rng.complex_gaussian() / norm_b;
        x = x + w * blocks[static_cast<std::size_t>(bo)][static_cast<std::size_t>(bc)];
      }
    }
    const ComplexMatrix g = cplx{0.5, 0.0} * (x + x.adjoint());
    eig = hermitian_eig(g);
    basis_pinned = true;
    for (std::size_t k = 0; k + 1 < eig.values.size(); ++k) {
      if (eig.values[k + 1] - eig.values[k] < tol.degeneracy_gap) {
        basis_pinned = false;
        break;
      }
    }
  }

  // Branch operators from the block diagonals in the candidate basis; the
  // off-diagonal remainder is exactly the reconstruction error.
  std::vector<ComplexMatrix> branch_ops(static_cast<std::size_t>(m),
                                        ComplexMatrix(Space::O, dim_o));
  const ComplexMatrix basis_adjoint = eig.vectors.adjoint();
  double off_mass = 0.0;
  for (int bo = 0; bo <= m; ++bo) {
    for (int bc = 0; bc <= m; ++bc) {
      const ComplexMatrix d = basis_adjoint *
                              blocks[static_cast<std::size_t>(bo)][static_cast<std::size_t>(bc)] *
                              eig.vectors;
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
          if (i == j) {
            branch_ops[static_cast<std::size_t>(i)].at(bo, bc) = d.at(i, i);
          } else {
            off_mass += std::norm(d.at(i, j));
          }
        }
      }
    }
  }
  const double residual = std::sqrt(off_mass) / norm_b;

  if (residual > tol.residual_tol) {
    if (!basis_pinned) {
      throw RetriesExhausted(
          "extract_copy_structure: mixture spectrum stayed degenerate across " +
          std::to_string(tol.max_retries + 1) + " draws and the blocks do not diagonalize");
    }
    return CopyVerdict{false, {}, residual,
                       "conditional blocks are not simultaneously diagonalizable"};
  }

  std::vector<cplx> records;
  for (int i = 0; i < m; ++i) {
    const ComplexMatrix& bi = branch_ops[static_cast<std::size_t>(i)];
    const ComplexVector im = bi * ready;
    const cplx beta_i = inner(ready, im);
    if ((im - beta_i * ready).norm() > tol.residual_tol) {
      return CopyVerdict{false, {}, residual,
                         "ready vector is not an eigenvector of branch operator " +
                             std::to_string(i)};
    }
    records.push_back(beta_i);
  }
  if (min_pairwise_gap(records) <= tol.degeneracy_gap) {
    return CopyVerdict{false, {}, residual, "record values are degenerate"};
  }

  EverettDecomposition d;
  d.residual = residual;
  for (int i = 0; i < m; ++i) {
    const ComplexVector v = eig.vectors.column(i);
    d.branches.push_back(EverettBranch{branch_ops[static_cast<std::size_t>(i)],
                                       ComplexMatrix::outer(v, v), v,
                                       records[static_cast<std::size_t>(i)]});
  }
  return CopyVerdict{true, canonicalized(std::move(d)), residual, ""};
}

EverettDecomposition canonicalized(EverettDecomposition d) {
  std::stable_sort(d.branches.begin(), d.branches.end(),
                   [](const EverettBranch& a, const EverettBranch& b) {
                     if (a.record_value.real() != b.record_value.real()) {
                       return a.record_value.real() < b.record_value.real();
                     }
                     return a.record_value.imag() < b.record_value.imag();
                   });
  for (EverettBranch& branch : d.branches) {
    branch.pointer_state = phase_fixed(std::move(branch.pointer_state));
  }
  d.canonical = true;
  return d;
}

std::optional<std::vector<int>> permutation_equivalent(const EverettDecomposition& d1,
                                                       const EverettDecomposition& d2,
                                                       double tol) {
  if (d1.branches.size() != d2.branches.size()) return std::nullopt;
  const std::size_t n = d1.branches.size();
  std::vector<int> pi(n, -1);
  std::vector<bool> used(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (used[j]) continue;
      if (frob_dist(d2.branches[i].projector, d1.branches[j].projector) <= tol &&
          frob_dist(d2.branches[i].branch_op, d1.branches[j].branch_op) <= tol) {
        pi[i] = static_cast<int>(j);
        used[j] = true;
        break;
      }
    }
    if (pi[i] < 0) return std::nullopt;
  }
  return pi;
}

ImpossibilityReport noncommuting_impossibility_check(const MeasurementModel& model,
                                                     const ComplexMatrix& a,
                                                     const ComplexMatrix& d,
                                                     std::uint64_t seed) {
  if (a.space() != Space::S || a.dim() != model.m) {
    throw DimensionMismatch("impossibility check: observable must act on the system space");
  }
  if (d.space() != Space::O || d.dim() != model.dim_o) {
    throw DimensionMismatch("impossibility check: record operator must act on the apparatus space");
  }
  // a must be diagonal in the pointer basis with distinct eigenvalues.
  double off = 0.0;
  std::vector<cplx> diag;
  for (int i = 0; i < model.m; ++i) {
    diag.push_back(a.at(i, i));
    for (int j = 0; j < model.m; ++j) {
      if (i != j) off += std::norm(a.at(i, j));
    }
  }
  if (std::sqrt(off) > model.tol.eq_tol * std::max(1.0, a.frobenius_norm())) {
    throw Error("impossibility check: observable is not diagonal in the pointer basis");
  }
  if (min_pairwise_gap(diag) <= model.tol.degeneracy_gap) {
    throw DegenerateSpectrum("impossibility check: observable spectrum is degenerate");
  }

  const HeisenbergOperator evolved = evolve_operator(model, d);
  const CopyVerdict verdict =
      extract_copy_structure(evolved, model.ready_ket(), model.tol, seed);
  if (!verdict.copy_form) {
    return ImpossibilityReport{false, false, 0.0,
                               "no copy structure to compare against: " + verdict.reason};
  }

  // Extracted projectors must be the pointer projectors up to renumbering.
  std::vector<bool> used(static_cast<std::size_t>(model.m), false);
  bool projector_match = true;
  for (int i = 0; i < model.m && projector_match; ++i) {
    const ComplexMatrix& p = verdict.decomposition.branches[static_cast<std::size_t>(i)].projector;
    int hit = -1;
    for (int s = 0; s < model.m; ++s) {
      if (used[static_cast<std::size_t>(s)]) continue;
      const ComplexVector ket = model.s_ket(s);
      if (frob_dist(p, ComplexMatrix::outer(ket, ket)) <= model.tol.residual_tol) {
        hit = s;
        break;
      }
    }
    if (hit < 0) {
      projector_match = false;
    } else {
      used[static_cast<std::size_t>(hit)] = true;
    }
  }

  // Observable diagonal in the extracted basis, with the model's pointer
  // spectrum laid out along it.
  ComplexMatrix a_prime(Space::S, model.m);
  for (int i = 0; i < model.m; ++i) {
    a_prime = a_prime + model.alpha[static_cast<std::size_t>(i)] *
                            verdict.decomposition.branches[static_cast<std::size_t>(i)].projector;
  }
  const double comm = frob_dist(a * a_prime, a_prime * a);
  return ImpossibilityReport{true, projector_match, comm, ""};
}

double expectation_consistency(const MeasurementModel& model, const ComplexMatrix& b,
                               const SystemState& state) {
  if (b.space() != Space::O || b.dim() != model.dim_o) {
    throw DimensionMismatch("expectation_consistency: operator must act on the apparatus space");
  }
  const ComplexVector psi_in = kron(model.ready_ket(), state.psi);
  const ComplexVector psi_t = evolve_composite(model, psi_in);
  const ComplexMatrix embedded = kron(b, ComplexMatrix::identity(Space::S, model.m));
  const cplx schrodinger_side = inner(psi_t, embedded * psi_t);
  const HeisenbergOperator bt = evolve_operator(model, b);
  const cplx heisenberg_side = inner(psi_in, bt.op * psi_in);
  return std::abs(schrodinger_side - heisenberg_side);
}

}  // namespace everett
