// hrflab: command-line front end for the experiment runner.

#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "hrf/cli.hpp"

namespace {

constexpr int kExitConfig = 3;
constexpr int kExitError = 4;

struct Options {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string resolutions;
};

void add_common(CLI::App* app, Options& o, bool config_required) {
  auto* c = app->add_option("--config", o.config, "key = value experiment config");
  if (config_required) c->required();
  c->check(CLI::ExistingFile);
  app->add_option("--out", o.out, "output directory (overrides 'out')");
  app->add_option("--seed", o.seed, "sampler seed (overrides 'seed')")->each([&o](const std::string&) {
    o.seed_set = true;
  });
  app->add_option("--resolution-override", o.resolutions,
                  "comma list of grid sizes: the last is N, a list of two or more replaces the refinement ladders");
}

hrf::cli::ExperimentConfig load(const Options& o) {
  using namespace hrf::cli;
  ExperimentConfig c;
  if (!o.config.empty()) c = load_config(o.config);
  if (!o.out.empty()) c.out = o.out;
  if (o.seed_set) c.seed = o.seed;
  if (!o.resolutions.empty()) {
    std::istringstream is("verify.resolutions = " + o.resolutions);
    const std::vector<int> Ns = parse_config(is, "--resolution-override").resolutions;
    if (Ns.empty()) throw ConfigError("--resolution-override: no grid sizes given");
    c.N = Ns.back();
    c.lines.erase("N");
    if (Ns.size() >= 2) {
      c.resolutions = Ns;
      c.evolution_resolutions = Ns;
      c.lines.erase("verify.resolutions");
      c.lines.erase("verify.evolution_resolutions");
    }
    c.source += " with --resolution-override " + o.resolutions;
  }
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace hrf::cli;
  CLI::App app{"hrflab: numerical lab for the second Ricci flow"};
  app.require_subcommand(1);

  Options run_o, verify_o, monitor_o, exh_o, report_o;
  auto* run = app.add_subcommand("run", "run the suites listed in the config");
  add_common(run, run_o, true);
  auto* verify = app.add_subcommand("verify", "identity and evolution-equation residual suites");
  add_common(verify, verify_o, false);
  auto* monitor = app.add_subcommand("monitor", "flow plus the a-priori estimate monitors");
  add_common(monitor, monitor_o, false);
  auto* exhaustion = app.add_subcommand("exhaustion", "exhaustion profile and conformal curvature check");
  add_common(exhaustion, exh_o, false);
  auto* rep = app.add_subcommand("report", "summarize a run directory");
  rep->add_option("--out", report_o.out, "run directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*rep) return report(report_o.out, std::cout);
    Options* o = nullptr;
    std::vector<std::string> suites;
    if (*run) {
      o = &run_o;
    } else if (*verify) {
      o = &verify_o;
      suites = {"identities", "evolution"};
    } else if (*monitor) {
      o = &monitor_o;
      suites = {"flow", "monitors"};
    } else {
      o = &exh_o;
      suites = {"exhaustion"};
    }
    ExperimentConfig c = load(*o);
    if (!suites.empty()) {
      c.suites = suites;
      c.lines.erase("suites");
    }
    const int status = run_experiment(c, std::cerr);
    std::cerr << "artifacts in " << c.out << " (exit " << status << ")\n";
    return status;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
}
