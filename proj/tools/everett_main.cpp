// everett: CLI for building ideal measurement models, running the rotated
// basis demonstration, extracting Everett copy structure, and sweeping the
// uniqueness properties. Emits deterministic JSON reports.
//
// Exit codes: 0 all checks passed, 1 a check failed (report still written),
// 2 usage, config or IO error.

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "everett/reporting.hpp"
#include "everett/version.hpp"

namespace {

using everett::ConfigInvalid;

std::uint64_t parse_seed_text(const std::string& text, const std::string& where) {
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(text, &pos);
    if (pos != text.size()) throw std::invalid_argument("trailing characters");
    return static_cast<std::uint64_t>(v);
  } catch (const std::exception&) {
    throw ConfigInvalid(where + ": expected an unsigned integer, got \"" + text + "\"");
  }
}

// Priority: command-line flag, then an explicit config value, then the
// EVERETT_SEED environment variable, then 0.
std::uint64_t resolve_seed(bool flag_given, std::uint64_t flag_value, bool config_given,
                           std::uint64_t config_value) {
  if (flag_given) return flag_value;
  if (config_given) return config_value;
  if (const char* env = std::getenv("EVERETT_SEED")) {
    return parse_seed_text(env, "EVERETT_SEED");
  }
  return 0;
}

void apply_tolerance_overrides(everett::Tolerances& tol,
                               const std::vector<std::string>& overrides) {
  for (const std::string& item : overrides) {
    const std::size_t eq = item.find('=');
    if (eq == std::string::npos) {
      throw ConfigInvalid("--tolerance: expected KEY=VALUE, got \"" + item + "\"");
    }
    const std::string key = item.substr(0, eq);
    const std::string value = item.substr(eq + 1);
    try {
      if (key == "eq_tol") {
        tol.eq_tol = std::stod(value);
      } else if (key == "residual_tol") {
        tol.residual_tol = std::stod(value);
      } else if (key == "degeneracy_gap") {
        tol.degeneracy_gap = std::stod(value);
      } else if (key == "max_retries") {
        tol.max_retries = std::stoi(value);
      } else {
        throw ConfigInvalid("--tolerance: unknown key \"" + key + "\"");
      }
    } catch (const ConfigInvalid&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigInvalid("--tolerance: cannot parse value \"" + value + "\" for " + key);
    }
  }
  try {
    tol.validate();
  } catch (const everett::Error& e) {
    throw ConfigInvalid(std::string("--tolerance: ") + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"everett " + std::string(everett::kVersion) +
               " - finite-dimensional ideal measurement verification"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(everett::kVersion));

  std::string config_path;
  std::string operator_path;
  std::string ready_path;
  std::string output_path = "-";
  std::vector<std::string> tolerance_overrides;
  std::uint64_t seed_flag = 0;
  int trials_flag = 0;
  int demo_m = 2;

  CLI::App* verify = app.add_subcommand("verify", "check conditions M1-M4 for a configured model");
  verify->add_option("--config", config_path, "scenario config JSON")->required();
  CLI::App* demo = app.add_subcommand(
      "demo-ambiguity", "run the M=2 rotated-basis demonstration");
  demo->add_option("--m", demo_m, "system dimension (must be 2)");
  CLI::App* decompose = app.add_subcommand(
      "decompose", "extract the Everett copy structure of a composite operator");
  decompose->add_option("--operator", operator_path, "operator JSON (dense row-major)")
      ->required();
  decompose->add_option("--ready", ready_path, "apparatus ready vector JSON")->required();
  CLI::App* sweep = app.add_subcommand("sweep", "randomized uniqueness falsification sweeps");
  sweep->add_option("--config", config_path, "scenario config JSON")->required();
  sweep->add_option("--trials", trials_flag, "trial count override");

  for (CLI::App* sub : {verify, demo, decompose, sweep}) {
    sub->add_option("--seed", seed_flag, "seed override (falls back to EVERETT_SEED, then 0)");
    sub->add_option("--tolerance", tolerance_overrides, "tolerance override KEY=VALUE")
        ->take_all();
    sub->add_option("--output", output_path, "report destination (default: stdout)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    everett::VerificationReport report;
    if (verify->parsed() || sweep->parsed()) {
      CLI::App* sub = verify->parsed() ? verify : sweep;
      everett::ScenarioConfig config =
          everett::config_from_json(everett::load_json_file(config_path));
      config.seed = resolve_seed(sub->count("--seed") > 0, seed_flag, config.seed_from_config,
                                 config.seed);
      if (sweep->parsed() && sweep->count("--trials") > 0) config.trials = trials_flag;
      apply_tolerance_overrides(config.tolerances, tolerance_overrides);
      report = verify->parsed() ? everett::run_verify(config) : everett::run_sweep(config);
    } else if (demo->parsed()) {
      everett::ScenarioConfig config;
      config.m = demo_m;
      config.seed = resolve_seed(demo->count("--seed") > 0, seed_flag, false, 0);
      apply_tolerance_overrides(config.tolerances, tolerance_overrides);
      report = everett::run_demo_ambiguity(config);
    } else {
      const everett::ComplexMatrix op =
          everett::matrix_from_json(everett::load_json_file(operator_path));
      const everett::ComplexVector ready =
          everett::vector_from_json(everett::load_json_file(ready_path));
      everett::Tolerances tol;
      apply_tolerance_overrides(tol, tolerance_overrides);
      const std::uint64_t seed =
          resolve_seed(decompose->count("--seed") > 0, seed_flag, false, 0);
      report = everett::run_decompose(op, ready, tol, seed);
    }
    everett::emit_report(report, output_path);
    return report.passed() ? 0 : 1;
  } catch (const everett::ConfigInvalid& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const everett::IoFailure& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 2;
  } catch (const everett::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
