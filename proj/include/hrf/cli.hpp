#pragma once

// Experiment runner behind the hrflab tool: key = value configs, suite
// orchestration, artifacts on disk and the consolidated report.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "hrf/flow.hpp"
#include "hrf/models.hpp"
#include "json.hpp"

namespace hrf::cli {

class ConfigError : public Error {
 public:
  using Error::Error;
};

struct ModelConfig {
  // flat | conformal_bump | poincare | complex_hyperbolic | product_flat_poincare
  // | kahler_potential | nonkahler_perturbed | from_file
  std::string kind = "flat";
  double amplitude = 0.5, width = 0.3;           // conformal_bump
  double center_x = 0.5, center_y = 0.5;         // poincare
  double radius = 1.0;                           // poincare, product_flat_poincare
  double eps = models::kBundledNonKahlerEps;     // nonkahler_perturbed, kahler_potential
  std::string potential = "trig";                // kahler_potential: trig | mixed
  std::string path;                              // from_file
};

struct ExperimentConfig {
  int n = 1;
  int N = 32;
  Boundary boundary = Boundary::Frozen;
  double inset = 0.0;
  ModelConfig model;

  double cfl = 0.1;
  double t_end = 0.1;
  double dt = 0.0;
  std::string boundary_source = "hold";  // hold | exact
  int cadence = 10;
  double positivity_floor = 1e-8;
  bool record_pinching = true;
  bool snapshots = true;

  // flow | monitors | ke | identities | evolution | exhaustion
  std::vector<std::string> suites = {"flow"};
  std::vector<int> resolutions = {16, 32, 64};
  std::vector<int> evolution_resolutions = {16, 32};
  std::string reference = "kahler_potential";  // g₀ for the parabolic-form identity: flat | kahler_potential

  double monitor_margin = 0.25;
  double monitor_t1 = 0.0;  // 0: 0.01/K
  double equivalence_eps = 0.1;
  double pinching_cap = 100.0;

  std::vector<double> kappas = {1.0 / 16, 1.0 / 32};
  double beta = 512.0;
  double rho0 = 10.0;
  int exhaustion_N = 0;  // 0: use N

  std::string out = "out";
  std::uint64_t seed = 1;

  /// Line each key was read from, for error messages.
  std::map<std::string, int> lines;
  std::string source = "<config>";
};

ExperimentConfig parse_config(std::istream& is, const std::string& source = "<config>");
ExperimentConfig load_config(const std::string& path);
/// Checks ranges, builds the model once and validates positivity. Throws
/// ConfigError naming the line and field.
void validate(const ExperimentConfig& cfg);
/// Normalized key = value text; parse_config(to_text(c)) reproduces c.
std::string to_text(const ExperimentConfig& cfg);

GridSpec grid_spec(const ExperimentConfig& cfg, int N);
models::Model build_model(const ExperimentConfig& cfg, int N);
FlowConfig flow_config(const ExperimentConfig& cfg, const models::Model& m);

/// Version of the artifact schemas in docs/formats.md; bump on any change.
constexpr int kSchemaVersion = 1;

constexpr int kExitOk = 0;
constexpr int kExitFail = 1;    // a verdict failed or artifacts are missing
constexpr int kExitGuard = 2;   // the flow halted on a guard breach

/// Runs every configured suite, writing artifacts under cfg.out. Progress goes
/// to `log`; nothing time-dependent reaches the artifacts.
int run_experiment(const ExperimentConfig& cfg, std::ostream& log);

/// Files a completed run of these suites leaves behind.
std::vector<std::string> expected_files(const std::vector<std::string>& suites);

struct Summary {
  nlohmann::json json;
  std::string text;
  std::vector<std::string> problems;  // missing or corrupt artifacts
};
/// Consolidates a run directory from its CSV artifacts.
Summary summarize(const std::string& dir);
/// Writes summary.txt and summary.json into dir (when it exists) and prints the
/// text. Nonzero when artifacts are missing or any verdict failed.
int report(const std::string& dir, std::ostream& out);

}  // namespace hrf::cli
