#include "everett/reporting.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>

#include "everett/version.hpp"

namespace everett {

namespace {

using nlohmann::json;

constexpr double kInvSqrt2 = 0.70710678118654752440;
// Pinned acceptance thresholds for the rotated-basis demonstration.
constexpr double kRewriteTol = 1e-12;
constexpr double kViolationTol = 1e-10;
constexpr double kOverlapTol = 1e-12;
constexpr double kWitnessPhaseTol = 1e-10;
// M2 relation tolerance used by the uniqueness falsification sweeps.
constexpr double kHypothesisTol = 1e-6;
// Decomposition comparison tolerance for the uniqueness sweeps.
constexpr double kEquivalenceTol = 1e-8;

std::string format_double(double v) {
  char buf[48];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

void render_value(const json& j, std::string& out, int depth) {
  const std::string pad(static_cast<std::size_t>(depth + 1) * 2, ' ');
  const std::string pad_close(static_cast<std::size_t>(depth) * 2, ' ');
  if (j.is_object()) {
    if (j.empty()) {
      out += "{}";
      return;
    }
    out += "{\n";
    bool first = true;
    for (const auto& item : j.items()) {
      if (!first) out += ",\n";
      first = false;
      out += pad;
      out += json(item.key()).dump();
      out += ": ";
      render_value(item.value(), out, depth + 1);
    }
    out += "\n" + pad_close + "}";
  } else if (j.is_array()) {
    if (j.empty()) {
      out += "[]";
      return;
    }
    out += "[\n";
    bool first = true;
    for (const auto& item : j) {
      if (!first) out += ",\n";
      first = false;
      out += pad;
      render_value(item, out, depth + 1);
    }
    out += "\n" + pad_close + "]";
  } else if (j.is_string()) {
    out += j.dump();
  } else if (j.is_boolean()) {
    out += j.get<bool>() ? "true" : "false";
  } else if (j.is_number_unsigned()) {
    out += std::to_string(j.get<std::uint64_t>());
  } else if (j.is_number_integer()) {
    out += std::to_string(j.get<std::int64_t>());
  } else if (j.is_number_float()) {
    out += format_double(j.get<double>());
  } else {
    out += "null";
  }
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

json complex_to_json(const cplx& z) { return json::array({z.real(), z.imag()}); }

cplx complex_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw ConfigInvalid(where + ": complex entries must be [re, im] number pairs");
  }
  const cplx z{j[0].get<double>(), j[1].get<double>()};
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
    throw ConfigInvalid(where + ": non-finite component");
  }
  return z;
}

Space space_from_string(const std::string& s, const std::string& where) {
  if (s == "S") return Space::S;
  if (s == "O") return Space::O;
  if (s == "OS") return Space::OS;
  throw ConfigInvalid(where + ": space tag must be one of \"S\", \"O\", \"OS\"");
}

json tolerances_to_json(const Tolerances& t) {
  return json{{"degeneracy_gap", t.degeneracy_gap},
              {"eq_tol", t.eq_tol},
              {"max_retries", t.max_retries},
              {"residual_tol", t.residual_tol}};
}

double require_number(const json& j, const std::string& where) {
  if (!j.is_number()) throw ConfigInvalid(where + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigInvalid(where + ": must be finite");
  return v;
}

int require_int(const json& j, const std::string& where) {
  if (!j.is_number_integer() && !j.is_number_unsigned()) {
    throw ConfigInvalid(where + ": expected an integer");
  }
  return j.get<int>();
}

std::vector<double> require_real_list(const json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigInvalid(where + ": expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(require_number(j[i], where + "[" + std::to_string(i) + "]"));
  }
  return out;
}

// Copy of the config with defaulted fields materialized.
ScenarioConfig resolved(ScenarioConfig c) {
  if (c.psi.empty()) {
    const double a = 1.0 / std::sqrt(static_cast<double>(c.m));
    c.psi.assign(static_cast<std::size_t>(c.m), cplx{a, 0.0});
  }
  if (c.alpha.empty()) {
    for (int i = 1; i <= c.m; ++i) c.alpha.push_back(static_cast<double>(i));
  }
  if (c.beta.empty()) {
    for (int i = 0; i <= c.m; ++i) c.beta.push_back(static_cast<double>(i));
  }
  return c;
}

void check_distinct(const std::vector<double>& values, double gap, const std::string& field) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    for (std::size_t j = i + 1; j < values.size(); ++j) {
      if (std::abs(values[i] - values[j]) <= gap) {
        throw ConfigInvalid(field + ": values " + std::to_string(i) + " and " +
                            std::to_string(j) + " are degenerate (gap <= " +
                            format_double(gap) + ")");
      }
    }
  }
}

ComplexMatrix record_operator(const MeasurementModel& model) {
  std::vector<cplx> d(model.beta.begin(), model.beta.end());
  return ComplexMatrix::diagonal(Space::O, d);
}

json witness_to_json(const EquivalenceWitness& w) {
  json phases = json::array();
  for (const cplx& a : w.phases) phases.push_back(complex_to_json(a));
  return json{{"permutation", w.permutation}, {"phases", phases}};
}

json branch_to_json(const EverettBranch& b) {
  return json{{"branch_op", matrix_to_json(b.branch_op)},
              {"pointer_state", vector_to_json(b.pointer_state)},
              {"projector", matrix_to_json(b.projector)},
              {"record_value", complex_to_json(b.record_value)}};
}

// Distinct record eigenvalues for randomized model draws.
std::vector<double> random_distinct_values(Rng& rng, int count, double min_gap) {
  for (int attempt = 0; attempt < 64; ++attempt) {
    std::vector<double> v;
    for (int i = 0; i < count; ++i) v.push_back(-5.0 + 10.0 * rng.uniform());
    bool ok = true;
    for (std::size_t i = 0; i < v.size() && ok; ++i) {
      for (std::size_t j = i + 1; j < v.size() && ok; ++j) {
        if (std::abs(v[i] - v[j]) <= min_gap) ok = false;
      }
    }
    if (ok) return v;
  }
  throw ConvergenceFailure("random_distinct_values: rejection sampling exhausted");
}

}  // namespace

ScenarioConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigInvalid("config: expected a JSON object");
  static const std::set<std::string> known{"m",    "duration", "psi",    "alpha",
                                           "beta", "seed",     "trials", "tolerances"};
  for (const auto& item : j.items()) {
    if (!known.count(item.key())) {
      throw ConfigInvalid("config: unknown key \"" + item.key() + "\"");
    }
  }
  ScenarioConfig c;
  if (j.contains("m")) c.m = require_int(j["m"], "m");
  if (j.contains("duration")) c.duration = require_number(j["duration"], "duration");
  if (j.contains("alpha")) c.alpha = require_real_list(j["alpha"], "alpha");
  if (j.contains("beta")) c.beta = require_real_list(j["beta"], "beta");
  if (j.contains("trials")) c.trials = require_int(j["trials"], "trials");
  if (j.contains("seed")) {
    const json& s = j["seed"];
    if (!s.is_number_integer() && !s.is_number_unsigned()) {
      throw ConfigInvalid("seed: expected an unsigned integer");
    }
    if (s.is_number_integer() && s.get<std::int64_t>() < 0) {
      throw ConfigInvalid("seed: must be nonnegative");
    }
    c.seed = s.get<std::uint64_t>();
    c.seed_from_config = true;
  }
  if (j.contains("psi")) {
    if (!j["psi"].is_array()) throw ConfigInvalid("psi: expected an array of [re, im] pairs");
    for (std::size_t i = 0; i < j["psi"].size(); ++i) {
      c.psi.push_back(complex_from_json(j["psi"][i], "psi[" + std::to_string(i) + "]"));
    }
  }
  if (j.contains("tolerances")) {
    const json& t = j["tolerances"];
    if (!t.is_object()) throw ConfigInvalid("tolerances: expected an object");
    static const std::set<std::string> tol_keys{"eq_tol", "residual_tol", "degeneracy_gap",
                                                "max_retries"};
    for (const auto& item : t.items()) {
      if (!tol_keys.count(item.key())) {
        throw ConfigInvalid("tolerances: unknown key \"" + item.key() + "\"");
      }
    }
    if (t.contains("eq_tol")) c.tolerances.eq_tol = require_number(t["eq_tol"], "tolerances.eq_tol");
    if (t.contains("residual_tol")) {
      c.tolerances.residual_tol = require_number(t["residual_tol"], "tolerances.residual_tol");
    }
    if (t.contains("degeneracy_gap")) {
      c.tolerances.degeneracy_gap =
          require_number(t["degeneracy_gap"], "tolerances.degeneracy_gap");
    }
    if (t.contains("max_retries")) {
      c.tolerances.max_retries = require_int(t["max_retries"], "tolerances.max_retries");
    }
  }
  validate_config(c);
  return c;
}

void validate_config(const ScenarioConfig& config) {
  if (config.m < 2) throw ConfigInvalid("m: must be at least 2");
  if (!(config.duration > 0.0) || !std::isfinite(config.duration)) {
    throw ConfigInvalid("duration: must be positive and finite");
  }
  if (config.trials < 1) throw ConfigInvalid("trials: must be at least 1");
  try {
    config.tolerances.validate();
  } catch (const Error& e) {
    throw ConfigInvalid(std::string("tolerances: ") + e.what());
  }
  if (!config.alpha.empty()) {
    if (static_cast<int>(config.alpha.size()) != config.m) {
      throw ConfigInvalid("alpha: expected " + std::to_string(config.m) + " values");
    }
    check_distinct(config.alpha, config.tolerances.degeneracy_gap, "alpha");
  }
  if (!config.beta.empty()) {
    if (static_cast<int>(config.beta.size()) != config.m + 1) {
      throw ConfigInvalid("beta: expected " + std::to_string(config.m + 1) + " values");
    }
    check_distinct(config.beta, config.tolerances.degeneracy_gap, "beta");
  }
  if (!config.psi.empty()) {
    if (static_cast<int>(config.psi.size()) != config.m) {
      throw ConfigInvalid("psi: expected " + std::to_string(config.m) + " amplitudes");
    }
    double norm2 = 0.0;
    for (const cplx& z : config.psi) norm2 += std::norm(z);
    if (std::abs(std::sqrt(norm2) - 1.0) > config.tolerances.eq_tol) {
      throw ConfigInvalid("psi: not normalized (norm = " + format_double(std::sqrt(norm2)) + ")");
    }
  }
}

json config_to_json(const ScenarioConfig& config) {
  const ScenarioConfig c = resolved(config);
  json psi = json::array();
  for (const cplx& z : c.psi) psi.push_back(complex_to_json(z));
  return json{{"alpha", c.alpha},
              {"beta", c.beta},
              {"duration", c.duration},
              {"m", c.m},
              {"psi", psi},
              {"seed", c.seed},
              {"tolerances", tolerances_to_json(c.tolerances)},
              {"trials", c.trials}};
}

MeasurementModel model_from_config(const ScenarioConfig& config) {
  validate_config(config);
  const ScenarioConfig c = resolved(config);
  return build_model(c.m, c.duration, c.alpha, c.beta, c.tolerances);
}

SystemState state_from_config(const ScenarioConfig& config) {
  const ScenarioConfig c = resolved(config);
  return SystemState(ComplexVector(Space::S, c.psi), c.tolerances.eq_tol);
}

bool VerificationReport::passed() const {
  if (counterexamples != 0) return false;
  for (const CheckEntry& c : checks) {
    if (!c.passed) return false;
  }
  return true;
}

json VerificationReport::to_json() const {
  json check_list = json::array();
  for (const CheckEntry& c : checks) {
    check_list.push_back(json{{"detail", c.detail.is_null() ? json::object() : c.detail},
                              {"name", c.name},
                              {"passed", c.passed},
                              {"residual", c.residual},
                              {"tolerance", c.tolerance}});
  }
  return json{{"checks", check_list},
              {"scenario", scenario},
              {"summary", json{{"counterexamples", counterexamples}, {"passed", passed()}}},
              {"versions", json{{"artifact", kVersion},
                                {"config_hash", fnv1a_hex(render_json(scenario))}}}};
}

VerificationReport run_verify(const ScenarioConfig& config) {
  validate_config(config);
  const MeasurementModel model = model_from_config(config);
  const SystemState state = state_from_config(config);
  const double eq_tol = model.tol.eq_tol;

  VerificationReport report;
  report.scenario = config_to_json(config);

  report.checks.push_back(CheckEntry{
      "M1 apparatus carries M+1 orthonormal states", true, 0.0, eq_tol,
      json{{"apparatus_dim", model.dim_o}, {"system_dim", model.m}}});

  const double norm_err = std::abs(state.psi.norm() - 1.0);
  report.checks.push_back(CheckEntry{
      "M3 initial product state with normalized amplitudes", norm_err <= eq_tol, norm_err,
      eq_tol, json{{"note", "initial state is |O:0> (x) |S;psi> by construction"}}});

  const ConditionReport m2 = verify_condition_M2(model);
  report.checks.push_back(CheckEntry{"M2 correlating action of the evolution", m2.passed,
                                     m2.residual, m2.tolerance,
                                     json{{"per_branch_residuals", m2.detail}}});

  const double unitarity =
      frob_dist(model.u.adjoint() * model.u, ComplexMatrix::identity(Space::OS, model.u.dim()));
  report.checks.push_back(CheckEntry{"M2 unitarity of the evolution", unitarity <= eq_tol,
                                     unitarity, eq_tol,
                                     json{{"kappa_times_duration", model.kappa * model.duration}}});

  const ConditionReport m4 = verify_condition_M4(model, record_operator(model));
  json m4_detail{{"per_index_residuals", m4.detail}};
  json pairs = json::array();
  for (const auto& p : m4.degenerate_pairs) pairs.push_back(json::array({p.first, p.second}));
  m4_detail["degenerate_pairs"] = pairs;
  report.checks.push_back(CheckEntry{"M4 record operator diagonal and nondegenerate", m4.passed,
                                     m4.residual, m4.tolerance, m4_detail});

  const ComplexVector psi_t = schrodinger_evolve(model, state);
  const BranchForm branch = check_branch_form(psi_t, model);
  double amplitude_err = 0.0;
  json coeffs = json::array();
  if (branch.in_form) {
    for (int i = 0; i < model.m; ++i) {
      amplitude_err = std::max(
          amplitude_err,
          std::abs(branch.coefficients[static_cast<std::size_t>(i)] - state.psi[i]));
      coeffs.push_back(complex_to_json(branch.coefficients[static_cast<std::size_t>(i)]));
    }
  }
  const double branch_residual = std::max(branch.residual, amplitude_err);
  report.checks.push_back(
      CheckEntry{"M3' branch form of the evolved state", branch.in_form && amplitude_err <= eq_tol,
                 branch_residual, eq_tol,
                 json{{"amplitude_error", amplitude_err},
                      {"coefficients", coeffs},
                      {"projection_residual", branch.residual}}});

  const double consistency = expectation_consistency(model, record_operator(model), state);
  report.checks.push_back(CheckEntry{
      "record expectation agrees between pictures", consistency <= eq_tol, consistency, eq_tol,
      json{{"note", "Schrodinger-side versus Heisenberg-side expectation of the record"}}});

  return report;
}

VerificationReport run_demo_ambiguity(const ScenarioConfig& config) {
  validate_config(config);
  if (config.m != 2) throw ConfigInvalid("m: the rotated-basis demonstration requires m = 2");
  const MeasurementModel model = model_from_config(config);

  VerificationReport report;
  report.scenario = config_to_json(config);

  // Reference pair: the model bases themselves.
  EquivalenceWitness identity_witness;
  for (int i = 0; i < model.m; ++i) {
    identity_witness.permutation.push_back(i);
    identity_witness.phases.push_back(cplx{1.0, 0.0});
  }
  const BasisPair unprimed = apply_witness(model, identity_witness);
  const std::vector<double> unprimed_residuals = verify_M2_for_basis(model, unprimed);
  double unprimed_worst = 0.0;
  for (double r : unprimed_residuals) unprimed_worst = std::max(unprimed_worst, r);
  report.checks.push_back(CheckEntry{"M2 holds for the model bases",
                                     unprimed_worst <= model.tol.eq_tol, unprimed_worst,
                                     model.tol.eq_tol,
                                     json{{"per_branch_residuals", unprimed_residuals}}});

  // Balanced two-branch state rewritten in the rotated bases keeps balanced
  // coefficients.
  const BasisPair rotated = hadamard_primed_bases(model);
  const ComplexVector psi_t = schrodinger_evolve(model, SystemState::uniform(2));
  json rewrite = json::array();
  double rewrite_err = 0.0;
  for (int i = 0; i < 2; ++i) {
    const cplx c = inner(kron(rotated.o_basis[static_cast<std::size_t>(i) + 1],
                              rotated.s_basis[static_cast<std::size_t>(i)]),
                         psi_t);
    rewrite.push_back(complex_to_json(c));
    rewrite_err = std::max(rewrite_err, std::abs(c - cplx{kInvSqrt2, 0.0}));
  }
  report.checks.push_back(CheckEntry{"rotated rewrite keeps balanced coefficients",
                                     rewrite_err <= kRewriteTol, rewrite_err, kRewriteTol,
                                     json{{"coefficients", rewrite},
                                          {"expected_magnitude", kInvSqrt2}}});

  // The rotated pair violates M2 by exact analytic amounts: the evolved
  // symmetric branch keeps overlap 1/sqrt(2) with its target (residual
  // sqrt(2 - sqrt(2))), while the antisymmetric branch lands entirely on
  // crossed products (overlap 0, residual sqrt(2)).
  const double expected_violation[2] = {std::sqrt(2.0 - std::sqrt(2.0)), std::sqrt(2.0)};
  const std::vector<double> rotated_residuals = verify_M2_for_basis(model, rotated);
  for (int i = 0; i < 2; ++i) {
    const double dev =
        std::abs(rotated_residuals[static_cast<std::size_t>(i)] - expected_violation[i]);
    report.checks.push_back(
        CheckEntry{"M2 violation magnitude for rotated branch " + std::to_string(i + 1),
                   dev <= kViolationTol, dev, kViolationTol,
                   json{{"expected", expected_violation[i]},
                        {"residual", rotated_residuals[static_cast<std::size_t>(i)]}}});
  }

  const cplx overlap = inner(kron(rotated.o_basis[1], rotated.s_basis[0]),
                             model.u * kron(model.ready_ket(), rotated.s_basis[0]));
  const double overlap_dev = std::abs(overlap - cplx{kInvSqrt2, 0.0});
  report.checks.push_back(CheckEntry{"rotated correlation overlap is 1/sqrt(2)",
                                     overlap_dev <= kOverlapTol, overlap_dev, kOverlapTol,
                                     json{{"overlap", complex_to_json(overlap)}}});

  const bool rotated_matches = match_to_unprimed(model, rotated).has_value();
  report.checks.push_back(CheckEntry{
      "rotated bases are not a permutation-phase relabeling", !rotated_matches,
      rotated_matches ? 1.0 : 0.0, 0.5,
      json{{"note", "overlap rows carry two entries of magnitude 1/sqrt(2)"}}});

  const auto matched = match_to_unprimed(model, unprimed);
  double witness_dev = 1.0;
  if (matched) {
    witness_dev = 0.0;
    for (int i = 0; i < model.m; ++i) {
      if (matched->permutation[static_cast<std::size_t>(i)] != i) witness_dev = 1.0;
      witness_dev = std::max(
          witness_dev, std::abs(matched->phases[static_cast<std::size_t>(i)] - cplx{1.0, 0.0}));
    }
  }
  report.checks.push_back(CheckEntry{
      "model bases matched by the identity witness", witness_dev <= kWitnessPhaseTol,
      witness_dev, kWitnessPhaseTol,
      matched ? witness_to_json(*matched) : json{{"note", "no witness found"}}});

  return report;
}

VerificationReport run_sweep(const ScenarioConfig& config) {
  validate_config(config);
  const ScenarioConfig c = resolved(config);
  const MeasurementModel model = model_from_config(c);

  VerificationReport report;
  report.scenario = config_to_json(c);

  // (a) Randomized falsification of Schrodinger-picture uniqueness.
  const BasisSearchResult search =
      random_basis_search(model, c.trials, Rng::derive(c.seed, 1), kHypothesisTol);
  report.counterexamples += search.counterexamples;
  report.checks.push_back(CheckEntry{
      "schrodinger uniqueness falsification search", search.counterexamples == 0,
      static_cast<double>(search.counterexamples), 0.0,
      json{{"hypothesis_hits", search.hypothesis_hits},
           {"note", "rotated ready vector held exactly equal to the model ready vector"},
           {"tolerance_for_M2_relation", kHypothesisTol},
           {"trials", search.trials}}});

  // (b) Adversarial relabelings must all satisfy the M2 relation and match.
  const int adversarial_trials = std::min(c.trials, 100);
  int adversarial_failures = 0;
  for (int t = 0; t < adversarial_trials; ++t) {
    Rng rng(Rng::derive(Rng::derive(c.seed, 2), static_cast<std::uint64_t>(t)));
    EquivalenceWitness w;
    for (int i = 0; i < model.m; ++i) w.permutation.push_back(i);
    for (int i = model.m - 1; i > 0; --i) {
      std::swap(w.permutation[static_cast<std::size_t>(i)],
                w.permutation[static_cast<std::size_t>(rng.uniform_int(i + 1))]);
    }
    for (int i = 0; i < model.m; ++i) {
      w.phases.push_back(std::polar(1.0, 2.0 * std::numbers::pi * rng.uniform() -
                                             std::numbers::pi));
    }
    const BasisPair bp = apply_witness(model, w);
    double worst = 0.0;
    for (double r : verify_M2_for_basis(model, bp)) worst = std::max(worst, r);
    const auto recovered = match_to_unprimed(model, bp);
    bool ok = worst <= kHypothesisTol && recovered.has_value();
    if (ok) {
      for (int i = 0; i < model.m; ++i) {
        ok = ok &&
             recovered->permutation[static_cast<std::size_t>(i)] ==
                 w.permutation[static_cast<std::size_t>(i)] &&
             std::abs(recovered->phases[static_cast<std::size_t>(i)] -
                      w.phases[static_cast<std::size_t>(i)]) <= kWitnessPhaseTol;
      }
    }
    if (!ok) ++adversarial_failures;
  }
  report.counterexamples += adversarial_failures;
  report.checks.push_back(CheckEntry{
      "schrodinger uniqueness adversarial relabelings", adversarial_failures == 0,
      static_cast<double>(adversarial_failures), 0.0, json{{"trials", adversarial_trials}}});

  // (c) Operator expansion uniqueness: extraction must not depend on the
  // mixing seed.
  const int extraction_trials = std::max(1, c.trials / 10);
  int extraction_failures = 0;
  for (int t = 0; t < extraction_trials; ++t) {
    const std::uint64_t trial_seed = Rng::derive(Rng::derive(c.seed, 3), static_cast<std::uint64_t>(t));
    Rng rng(trial_seed);
    const std::vector<double> beta = random_distinct_values(rng, model.m + 1, 1e-2);
    const MeasurementModel trial_model =
        build_model(c.m, c.duration, {}, beta, c.tolerances);
    const HeisenbergOperator evolved = evolve_operator(trial_model, record_operator(trial_model));
    bool ok = true;
    std::vector<EverettDecomposition> decomps;
    for (std::uint64_t k = 0; k < 3 && ok; ++k) {
      const CopyVerdict v = extract_copy_structure(evolved, trial_model.ready_ket(),
                                                   trial_model.tol, Rng::derive(trial_seed, k));
      if (!v.copy_form) {
        ok = false;
      } else {
        decomps.push_back(v.decomposition);
      }
    }
    for (std::size_t i = 0; ok && i < decomps.size(); ++i) {
      for (std::size_t j = i + 1; ok && j < decomps.size(); ++j) {
        ok = permutation_equivalent(decomps[i], decomps[j], kEquivalenceTol).has_value();
      }
    }
    if (!ok) ++extraction_failures;
  }
  report.counterexamples += extraction_failures;
  report.checks.push_back(CheckEntry{
      "operator expansion uniqueness across mixing seeds", extraction_failures == 0,
      static_cast<double>(extraction_failures), 0.0,
      json{{"mixing_seeds_per_operator", 3}, {"trials", extraction_trials}}});

  // (d) Noncommuting impossibility across random record operators.
  const int impossibility_trials = std::max(1, c.trials / 10);
  int impossibility_failures = 0;
  std::vector<cplx> alpha_diag(c.alpha.begin(), c.alpha.end());
  const ComplexMatrix a = ComplexMatrix::diagonal(Space::S, alpha_diag);
  for (int t = 0; t < impossibility_trials; ++t) {
    const std::uint64_t trial_seed = Rng::derive(Rng::derive(c.seed, 4), static_cast<std::uint64_t>(t));
    Rng rng(trial_seed);
    // A valid record operator is diagonal in the apparatus basis with
    // nondegenerate record values.
    const std::vector<double> records = random_distinct_values(rng, model.dim_o, 1e-2);
    const ComplexMatrix d =
        ComplexMatrix::diagonal(Space::O, std::vector<cplx>(records.begin(), records.end()));
    const ImpossibilityReport imp =
        noncommuting_impossibility_check(model, a, d, Rng::derive(trial_seed, 9));
    const bool ok =
        imp.applicable && imp.projector_match && imp.commutator_norm <= model.tol.eq_tol;
    if (!ok) ++impossibility_failures;
  }
  report.counterexamples += impossibility_failures;
  report.checks.push_back(CheckEntry{
      "noncommuting impossibility randomized check", impossibility_failures == 0,
      static_cast<double>(impossibility_failures), 0.0, json{{"trials", impossibility_trials}}});

  return report;
}

VerificationReport run_decompose(const ComplexMatrix& op, const ComplexVector& ready,
                                 const Tolerances& tol, std::uint64_t seed) {
  tol.validate();
  const int m = ready.dim() - 1;
  VerificationReport report;
  report.scenario = json{{"operator", json{{"dim", op.dim()}, {"space", space_name(op.space())}}},
                         {"ready", vector_to_json(ready)},
                         {"seed", seed},
                         {"tolerances", tolerances_to_json(tol)}};
  const HeisenbergOperator heisenberg{op, m, OperatorProvenance{op.space(), 0.0}};
  const CopyVerdict verdict = extract_copy_structure(heisenberg, ready, tol, seed);
  json detail;
  if (verdict.copy_form) {
    json branches = json::array();
    for (const EverettBranch& b : verdict.decomposition.branches) branches.push_back(branch_to_json(b));
    detail = json{{"branches", branches}, {"canonical", verdict.decomposition.canonical}};
  } else {
    detail = json{{"reason", verdict.reason}};
  }
  report.checks.push_back(CheckEntry{"everett copy structure of the operator", verdict.copy_form,
                                     verdict.residual, tol.residual_tol, detail});
  return report;
}

json matrix_to_json(const ComplexMatrix& a) {
  json entries = json::array();
  for (const cplx& z : a.entries()) entries.push_back(complex_to_json(z));
  return json{{"dim", a.dim()}, {"entries", entries}, {"space", space_name(a.space())}};
}

ComplexMatrix matrix_from_json(const json& j) {
  if (!j.is_object() || !j.contains("dim") || !j.contains("entries") || !j.contains("space")) {
    throw ConfigInvalid("matrix: expected an object with dim, entries and space");
  }
  const int dim = require_int(j["dim"], "matrix.dim");
  if (dim < 1) throw ConfigInvalid("matrix.dim: must be positive");
  const Space space = space_from_string(j["space"].is_string() ? j["space"].get<std::string>() : "",
                                        "matrix.space");
  const json& entries = j["entries"];
  if (!entries.is_array() || entries.size() != static_cast<std::size_t>(dim) * dim) {
    throw ConfigInvalid("matrix.entries: expected " + std::to_string(dim * dim) +
                        " [re, im] pairs (row-major)");
  }
  std::vector<cplx> data;
  data.reserve(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    data.push_back(complex_from_json(entries[i], "matrix.entries[" + std::to_string(i) + "]"));
  }
  return ComplexMatrix(space, dim, std::move(data));
}

json vector_to_json(const ComplexVector& v) {
  json data = json::array();
  for (const cplx& z : v.data()) data.push_back(complex_to_json(z));
  return json{{"data", data}, {"dim", v.dim()}, {"space", space_name(v.space())}};
}

ComplexVector vector_from_json(const json& j) {
  if (!j.is_object() || !j.contains("dim") || !j.contains("data") || !j.contains("space")) {
    throw ConfigInvalid("vector: expected an object with dim, data and space");
  }
  const int dim = require_int(j["dim"], "vector.dim");
  if (dim < 1) throw ConfigInvalid("vector.dim: must be positive");
  const Space space = space_from_string(j["space"].is_string() ? j["space"].get<std::string>() : "",
                                        "vector.space");
  const json& data = j["data"];
  if (!data.is_array() || data.size() != static_cast<std::size_t>(dim)) {
    throw ConfigInvalid("vector.data: expected " + std::to_string(dim) + " [re, im] pairs");
  }
  std::vector<cplx> out;
  out.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    out.push_back(complex_from_json(data[i], "vector.data[" + std::to_string(i) + "]"));
  }
  return ComplexVector(space, std::move(out));
}

std::string render_json(const json& j) {
  std::string out;
  render_value(j, out, 0);
  out += "\n";
  return out;
}

void emit_report(const VerificationReport& report, const std::string& path) {
  const std::string text = render_json(report.to_json());
  if (path == "-") {
    std::cout << text;
    std::cout.flush();
    if (!std::cout) throw IoFailure("write to stdout failed");
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoFailure("cannot open \"" + path + "\" for writing");
  out << text;
  out.flush();
  if (!out) throw IoFailure("write to \"" + path + "\" failed");
}

json load_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open \"" + path + "\" for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoFailure("read from \"" + path + "\" failed");
  try {
    return json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw ConfigInvalid("\"" + path + "\": " + e.what());
  }
}

}  // namespace everett
