#pragma once

// Scenario ingestion, orchestration of the verification runs and sweeps, and
// deterministic machine-readable reports. This is the artifact's only
// external surface; everything here is a pure function of the configuration.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "everett/basis_uniqueness.hpp"
#include "everett/everett_copies.hpp"
#include "everett/measurement.hpp"

namespace everett {

struct ScenarioConfig {
  int m = 2;
  double duration = 1.0;
  std::vector<cplx> psi;      // empty -> uniform 1/sqrt(M)
  std::vector<double> alpha;  // empty -> 1..M
  std::vector<double> beta;   // empty -> 0..M
  std::uint64_t seed = 0;
  bool seed_from_config = false;  // true when the config file named a seed
  int trials = 1000;
  Tolerances tolerances;
};

// Parses and validates a config object; throws ConfigInvalid with the
// offending field in the message.
ScenarioConfig config_from_json(const nlohmann::json& j);
void validate_config(const ScenarioConfig& config);

// Resolved echo of the config (defaults filled in); this is what reports
// embed and what the config hash covers.
nlohmann::json config_to_json(const ScenarioConfig& config);

MeasurementModel model_from_config(const ScenarioConfig& config);
SystemState state_from_config(const ScenarioConfig& config);

struct CheckEntry {
  std::string name;  // names the measurement condition or property checked
  bool passed = false;
  double residual = 0.0;
  double tolerance = 0.0;
  nlohmann::json detail;
};

struct VerificationReport {
  nlohmann::json scenario;
  std::vector<CheckEntry> checks;
  int counterexamples = 0;

  bool passed() const;
  nlohmann::json to_json() const;
};

// Model construction checks: conditions M1-M4, branch form of the evolved
// state, and Schrodinger/Heisenberg expectation agreement.
VerificationReport run_verify(const ScenarioConfig& config);

// The M=2 rotated-basis demonstration: rewrite coefficients, the quantified
// M2 violations of the rotated pair, and the equivalence verdicts.
VerificationReport run_demo_ambiguity(const ScenarioConfig& config);

// Randomized falsification sweeps for the uniqueness properties; every
// counterexample count is expected to be zero.
VerificationReport run_sweep(const ScenarioConfig& config);

// Standalone copy-structure extraction for an externally supplied operator.
VerificationReport run_decompose(const ComplexMatrix& op, const ComplexVector& ready,
                                 const Tolerances& tol, std::uint64_t seed);

// Dense row-major serialization with explicit dims and space tags; complex
// entries as [re, im] pairs.
nlohmann::json matrix_to_json(const ComplexMatrix& a);
ComplexMatrix matrix_from_json(const nlohmann::json& j);
nlohmann::json vector_to_json(const ComplexVector& v);
ComplexVector vector_from_json(const nlohmann::json& j);

// Key-sorted rendering with doubles at 17 significant digits, 2-space
// indentation, newline-terminated; byte-identical for equal inputs.
std::string render_json(const nlohmann::json& j);

// Writes render_json of the report to path ("-" for stdout); throws IoFailure.
void emit_report(const VerificationReport& report, const std::string& path);

// Reads and parses a JSON file; throws IoFailure on IO problems and
// ConfigInvalid on malformed JSON.
nlohmann::json load_json_file(const std::string& path);

}  // namespace everett
