#include "everett/basis_uniqueness.hpp"

#include <cmath>
#include <string>

namespace everett {

namespace {

// Overlap structure thresholds for the permutation matcher. The uniqueness
// property guarantees a 0/1 overlap pattern, so near-ties mean "not
// equivalent" rather than calling for an assignment solver.
constexpr double kDominantOverlap = 1.0 - 1e-6;
constexpr double kStrayOverlap = 1e-6;

}  // namespace

void validate_basis_pair(const BasisPair& bp, const MeasurementModel& model) {
  const double tol = model.tol.eq_tol;
  if (static_cast<int>(bp.s_basis.size()) != model.m) {
    throw Error("basis pair: expected " + std::to_string(model.m) + " system vectors");
  }
  if (static_cast<int>(bp.o_basis.size()) != model.dim_o) {
    throw Error("basis pair: expected " + std::to_string(model.dim_o) + " apparatus vectors");
  }
  for (const auto& v : bp.s_basis) {
    if (v.space() != Space::S || v.dim() != model.m) {
      throw DimensionMismatch("basis pair: system vector has wrong shape");
    }
  }
  for (const auto& v : bp.o_basis) {
    if (v.space() != Space::O || v.dim() != model.dim_o) {
      throw DimensionMismatch("basis pair: apparatus vector has wrong shape");
    }
  }
  for (std::size_t i = 0; i < bp.s_basis.size(); ++i) {
    for (std::size_t j = i; j < bp.s_basis.size(); ++j) {
      const cplx g = inner(bp.s_basis[i], bp.s_basis[j]);
      const double want = (i == j) ? 1.0 : 0.0;
      if (std::abs(g - want) > tol) {
        throw Error("basis pair: system family is not orthonormal at (" + std::to_string(i) +
                    "," + std::to_string(j) + ")");
      }
    }
  }
  for (std::size_t i = 0; i < bp.o_basis.size(); ++i) {
    for (std::size_t j = i; j < bp.o_basis.size(); ++j) {
      const cplx g = inner(bp.o_basis[i], bp.o_basis[j]);
      const double want = (i == j) ? 1.0 : 0.0;
      if (std::abs(g - want) > tol) {
        throw Error("basis pair: apparatus family is not orthonormal at (" + std::to_string(i) +
                    "," + std::to_string(j) + ")");
      }
    }
  }
  if ((bp.o_basis[0] - model.ready_ket()).norm() > tol) {
    throw Error("basis pair: o_basis[0] must equal the ready ket");
  }
}

BasisPair hadamard_primed_bases(const MeasurementModel& model) {
  if (model.m != 2) throw InvalidDimension("hadamard_primed_bases requires M = 2");
  const cplx h{1.0 / std::sqrt(2.0), 0.0};
  BasisPair bp;
  bp.s_basis.push_back(h * (model.s_ket(0) + model.s_ket(1)));
  bp.s_basis.push_back(h * (model.s_ket(0) - model.s_ket(1)));
  bp.o_basis.push_back(model.o_ket(0));
  bp.o_basis.push_back(h * (model.o_ket(1) + model.o_ket(2)));
  bp.o_basis.push_back(h * (model.o_ket(1) - model.o_ket(2)));
  return bp;
}

std::vector<double> verify_M2_for_basis(const MeasurementModel& model, const BasisPair& bp) {
  validate_basis_pair(bp, model);
  std::vector<double> residuals;
  residuals.reserve(bp.s_basis.size());
  const ComplexVector ready = model.ready_ket();
  for (int b = 0; b < model.m; ++b) {
    const ComplexVector got =
        model.u * kron(ready, bp.s_basis[static_cast<std::size_t>(b)]);
    const ComplexVector want = kron(bp.o_basis[static_cast<std::size_t>(b) + 1],
                                    bp.s_basis[static_cast<std::size_t>(b)]);
    residuals.push_back((got - want).norm());
  }
  return residuals;
}

std::optional<EquivalenceWitness> match_to_unprimed(const MeasurementModel& model,
                                                    const BasisPair& bp) {
  validate_basis_pair(bp, model);
  EquivalenceWitness witness;
  std::vector<bool> used(static_cast<std::size_t>(model.m), false);

  for (int i = 0; i < model.m; ++i) {
    const ComplexVector& sv = bp.s_basis[static_cast<std::size_t>(i)];
    int target = -1;
    cplx overlap{};
    for (int j = 0; j < model.m; ++j) {
      const cplx g = inner(model.s_ket(j), sv);
      if (std::abs(g) > kDominantOverlap) {
        if (target >= 0) return std::nullopt;  // two dominant entries in a row
        target = j;
        overlap = g;
      } else if (std::abs(g) > kStrayOverlap) {
        return std::nullopt;  // neither dominant nor negligible
      }
    }
    if (target < 0 || used[static_cast<std::size_t>(target)]) return std::nullopt;
    used[static_cast<std::size_t>(target)] = true;
    witness.permutation.push_back(target);
    witness.phases.push_back(std::polar(1.0, std::arg(overlap)));
  }

  // The apparatus family must follow the same permutation with unit phase.
  for (int i = 0; i < model.m; ++i) {
    const ComplexVector& ov = bp.o_basis[static_cast<std::size_t>(i) + 1];
    const int target = witness.permutation[static_cast<std::size_t>(i)] + 1;
    for (int l = 0; l < model.dim_o; ++l) {
      const cplx g = inner(model.o_ket(l), ov);
      if (l == target) {
        if (std::abs(g - cplx{1.0, 0.0}) > kStrayOverlap) return std::nullopt;
      } else if (std::abs(g) > kStrayOverlap) {
        return std::nullopt;
      }
    }
  }
  return witness;
}

BasisPair apply_witness(const MeasurementModel& model, const EquivalenceWitness& witness) {
  if (static_cast<int>(witness.permutation.size()) != model.m ||
      static_cast<int>(witness.phases.size()) != model.m) {
    throw DimensionMismatch("apply_witness: witness arity does not match the model");
  }
  BasisPair bp;
  bp.o_basis.push_back(model.ready_ket());
  for (int i = 0; i < model.m; ++i) {
    const int p = witness.permutation[static_cast<std::size_t>(i)];
    bp.s_basis.push_back(witness.phases[static_cast<std::size_t>(i)] * model.s_ket(p));
    bp.o_basis.push_back(model.o_ket(p + 1));
  }
  return bp;
}

BasisPair random_basis_pair(const MeasurementModel& model, Rng& rng) {
  BasisPair bp;
  const ComplexMatrix ws = haar_random_unitary(model.m, rng, Space::S);
  for (int i = 0; i < model.m; ++i) bp.s_basis.push_back(ws.column(i));

  // Haar rotation of the apparatus subspace orthogonal to the ready ket; the
  // ready ket itself stays exactly fixed.
  const ComplexMatrix wo = haar_random_unitary(model.m, rng, Space::S);
  bp.o_basis.push_back(model.ready_ket());
  for (int i = 0; i < model.m; ++i) {
    ComplexVector v(Space::O, model.dim_o);
    for (int r = 0; r < model.m; ++r) v[r + 1] = wo.at(r, i);
    bp.o_basis.push_back(v);
  }
  return bp;
}

BasisSearchResult random_basis_search(const MeasurementModel& model, int trials,
                                      std::uint64_t seed, double tol) {
  if (trials < 1) throw Error("random_basis_search: trials must be at least 1");
  BasisSearchResult result{trials, 0, 0};
  for (int t = 0; t < trials; ++t) {
    Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(t)));
    const BasisPair bp = random_basis_pair(model, rng);
    const std::vector<double> residuals = verify_M2_for_basis(model, bp);
    double worst = 0.0;
    for (double r : residuals) worst = std::max(worst, r);
    if (worst > tol) continue;
    ++result.hypothesis_hits;
    if (!match_to_unprimed(model, bp)) ++result.counterexamples;
  }
  return result;
}

}  // namespace everett
