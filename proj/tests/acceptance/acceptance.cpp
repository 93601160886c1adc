// Acceptance run: one PASS/FAIL line per criterion. Tolerances are pinned
// here. Bundled configs are read from argv[1], artifacts go under argv[2].

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "hrf/analysis.hpp"
#include "hrf/cli.hpp"
#include "hrf/flow.hpp"
#include "hrf/models.hpp"
#include "json.hpp"

using namespace hrf;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// criterion 1
constexpr double kFlatTol = 1e-12;
constexpr double kFlatSeconds = 10.0;
// criteria 2, 3
constexpr double kIdentityOrder = 3.5;
constexpr double kIdentityFinest = 1e-5;
constexpr double kIdentitySeconds = 120.0;
// criterion 4
constexpr double kKeError = 1e-4;
constexpr double kKeRatio = 8.0;
constexpr double kKeLambda = 2.0;
constexpr double kKeLambdaRel = 0.01;
constexpr double kKeSeconds = 120.0;
// criterion 5
constexpr double kTorsionGrowth = 2.0;
constexpr double kPersistenceHorizon = 0.05;  // in units of 1/K
// criterion 6
constexpr double kEvolutionOrder = 2.0;
constexpr double kCalibration = 10.0;
// criterion 7
constexpr double kPinchingC2 = 100.0;
// criterion 9
constexpr double kRescaleL = 4.0;
constexpr double kRescaleTol = 1e-8;
// criterion 10
constexpr double kExhaustionSeconds = 30.0;
const std::vector<double> kKappas = {1.0 / 16.0, 1.0 / 32.0};

fs::path g_configs, g_out;

struct Run {
  fs::path dir;
  int status = -1;
  double seconds = 0.0;
  json reports;
  json summary;
};

std::map<std::string, Run> g_runs;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

cli::ExperimentConfig config(const std::string& name) { return cli::load_config(g_configs / (name + ".conf")); }

// Runs a bundled config (optionally with replaced suites) once and caches it.
const Run& bundled(const std::string& name, const std::vector<std::string>& suites = {}, const std::string& tag = "") {
  const std::string key = tag.empty() ? name : name + "_" + tag;
  auto it = g_runs.find(key);
  if (it != g_runs.end()) return it->second;
  cli::ExperimentConfig c = config(name);
  if (!suites.empty()) c.suites = suites;
  Run r;
  r.dir = g_out / key;
  fs::remove_all(r.dir);
  c.out = r.dir.string();
  std::ostringstream log;
  const auto t0 = std::chrono::steady_clock::now();
  r.status = cli::run_experiment(c, log);
  r.seconds = seconds_since(t0);
  std::ifstream is(r.dir / "reports.json");
  r.reports = json::parse(is);
  r.summary = cli::summarize(r.dir.string()).json;
  return g_runs.emplace(key, std::move(r)).first->second;
}

const json& report_named(const json& list, const std::string& name) {
  for (const auto& r : list)
    if (r["name"] == name) return r;
  throw Error("no report named " + name);
}

const json& monitor(const Run& r, const std::string& name) {
  for (const auto& m : r.summary["monitors"])
    if (m["name"] == name) return m;
  throw Error(r.dir.filename().string() + ": no " + name + " monitor series");
}

double min_order(const json& rep) {
  double lo = INFINITY;
  for (const auto& o : rep["orders"]) lo = std::min(lo, o.get<double>());
  return lo;
}

std::vector<std::map<std::string, std::string>> read_csv(const fs::path& p) {
  std::ifstream is(p);
  if (!is) throw Error("cannot open " + p.string());
  auto split = [](const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
  };
  std::string line;
  std::getline(is, line);
  const auto head = split(line);
  std::vector<std::map<std::string, std::string>> rows;
  while (std::getline(is, line)) {
    const auto cells = split(line);
    std::map<std::string, std::string> row;
    for (std::size_t k = 0; k < head.size() && k < cells.size(); ++k) row[head[k]] = cells[k];
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string num(double x, int prec = 3) {
  std::ostringstream os;
  os << std::setprecision(prec) << x;
  return os.str();
}

struct Verdict {
  bool pass = true;
  std::string detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + std::string("FAILED ") + what;
    }
  }
  void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

// ---------------------------------------------------------------------------

Verdict flat_fixed_point() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  // native storage (a constant field carries no axis dependence), plus an
  // n = 1 copy stored at every point so the stencils themselves run
  for (int n : {1, 2, -1}) {
    const MetricField flat0 = models::flat(GridSpec::periodic(std::abs(n), 32)).g0;
    const MetricField g0 = n > 0 ? flat0 : MetricField(flat0.tensor().broadcast_to(0b11));
    FlowConfig cfg;
    FlowState s{0.0, g0, g0};
    const double dt = cfl_dt(g0, cfg.cfl);
    double dev = 0.0, curv = 0.0;
    for (int k = 1; k <= 100; ++k) {
      s = step(s, dt, cfg);
      dev = std::max(dev, sup_abs(s.g.tensor() - g0.tensor()));
      if (k % 10 == 0) {
        const DiagnosticsRecord d = diagnose(s, k, dt, 1, false);
        for (double x : {d.sup_rm, d.sup_t2, d.sup_grad_rm, d.sup_grad_t, d.ric_min, d.ric_max})
          curv = std::max(curv, std::abs(x));
      }
    }
    const std::string tag = n > 0 ? "n=" + std::to_string(n) : "n=1 fully stored";
    v.require(dev <= kFlatTol, tag + " sup|g-g0| " + num(dev));
    v.require(curv <= kFlatTol, tag + " curvature " + num(curv));
    v.note(tag + ": sup|g-g0| " + num(dev) + ", curvature " + num(curv));
  }
  const double secs = seconds_since(t0);
  v.require(secs < kFlatSeconds, "runtime " + num(secs) + " s");
  v.note(num(secs) + " s");
  return v;
}

Verdict identity_suite() {
  Verdict v;
  const Run& r = bundled("nonkahler", {"identities"}, "identities");
  for (const char* name : {"commutation", "torsion_bianchi", "parabolic_form"}) {
    const json& rep = report_named(r.reports["identities"], name);
    const double order = min_order(rep), fin = rep["sup_residual"].get<double>();
    v.require(order >= kIdentityOrder, std::string(name) + " order " + num(order));
    v.require(fin <= kIdentityFinest, std::string(name) + " finest " + num(fin));
    v.note(std::string(name) + " order " + num(order) + " finest " + num(fin));
  }
  v.require(r.seconds < kIdentitySeconds, "runtime " + num(r.seconds) + " s");
  v.note("suite " + num(r.seconds) + " s");
  return v;
}

Verdict ricci_formulas() {
  Verdict v;
  const json& rep = report_named(bundled("nonkahler", {"identities"}, "identities").reports["identities"], "ricci_formulas");
  const double order = min_order(rep), fin = rep["sup_residual"].get<double>();
  v.require(order >= kIdentityOrder, "order " + num(order));
  v.note("order " + num(order) + ", finest residual " + num(fin) + " at N = 16, 32, 64");
  return v;
}

Verdict ke_oracle() {
  Verdict v;
  const Run& r = bundled("poincare", {"ke"}, "ke");
  const json& ke = r.reports["ke"];
  const std::vector<double> err = ke["rel_errors"];
  const std::vector<int> Ns = ke["resolutions"];
  const double lam = ke["lambda_measured"];
  v.require(Ns.back() == 64, "finest N " + std::to_string(Ns.back()));
  v.require(err.back() <= kKeError, "rel error " + num(err.back()));
  const double ratio = err[err.size() - 2] / err.back();
  v.require(ratio >= kKeRatio, "halving ratio " + num(ratio));
  v.require(std::abs(lam - kKeLambda) <= kKeLambdaRel * kKeLambda, "lambda " + num(lam, 6));
  v.require(r.seconds < kKeSeconds, "runtime " + num(r.seconds) + " s");
  v.note("lambda " + num(lam, 6) + ", rel error " + num(err[err.size() - 2]) + " -> " + num(err.back()) +
         " (ratio " + num(ratio) + "), " + num(r.seconds) + " s");
  return v;
}

Verdict kahler_persistence() {
  Verdict v;
  const cli::ExperimentConfig c = config("kahler");
  v.require(c.n == 2 && c.model.kind == "kahler_potential", "bundled Kähler config is not potential-generated n = 2");
  v.require(c.cadence == 1, "diagnostics not recorded every step");
  const double K = curvature_scale(build_stack(cli::build_model(c, c.N).g0));
  const Run& r = bundled("kahler");
  const json& f = r.summary["flow"];
  const double t0 = f["torsion_initial"], tmax = f["torsion_max"], tf = f["t_final"];
  v.require(tf >= kPersistenceHorizon / K * (1.0 - 1e-9), "run ends at t = " + num(tf) + " < 0.05/K");
  v.require(t0 > 0.0 && tmax <= kTorsionGrowth * t0, "sup|T| " + num(t0) + " -> max " + num(tmax));
  v.note("K " + num(K) + ", t in [0, " + num(tf) + "], sup|T|(0) " + num(t0) + ", max " + num(tmax) + " (" +
         num(tmax / t0) + "x)");
  return v;
}

Verdict evolution_suite() {
  Verdict v;
  const Run& r = bundled("nonkahler", {"evolution"}, "evolution");
  for (const json& rep : r.reports["evolution"]) {
    const std::string name = rep["name"];
    if (name == "evolution_higher") {
      const double c = rep["sup_residual"];
      v.require(rep["pass"].get<bool>() && c <= kCalibration, "calibration " + num(c));
      v.note("higher-order calibration " + num(c));
      continue;
    }
    const double order = min_order(rep);
    v.require(order >= kEvolutionOrder, name + " order " + num(order));
    v.note(name.substr(10) + " order " + num(order));
  }
  return v;
}

Verdict sign_monitors() {
  Verdict v;
  for (const char* name : {"poincare", "product"}) {
    const Run& r = name == std::string("poincare") ? bundled(name, {"flow", "monitors"}, "monitors") : bundled(name);
    const json& pr = monitor(r, "preserved_ricci");
    const json& pi = monitor(r, "pinching");
    v.require(pr["hypothesis_ok"].get<bool>() && pr["pass"].get<bool>(),
              std::string(name) + " preserved Ric (final lambda_max " + num(pr["final_value"].get<double>()) + ")");
    const double c2 = pi["measured"].is_null() ? INFINITY : pi["measured"].get<double>();
    v.require(pi["hypothesis_ok"].get<bool>() && pi["pass"].get<bool>() && c2 <= kPinchingC2,
              std::string(name) + " pinching c2 " + num(c2));
    v.note(std::string(name) + ": lambda_max(Ric) final " + num(pr["final_value"].get<double>()) + ", c2 " + num(c2));
  }
  return v;
}

Verdict quasi_negative() {
  Verdict v;
  const Run& r = bundled("conformal_bump");
  const json& q = monitor(r, "quasi_negative");
  const double t1 = q["parameter"];
  double worst = -INFINITY;
  int n = 0;
  for (const auto& row : read_csv(r.dir / "monitors.csv"))
    if (row.at("monitor") == "quasi_negative" && std::stod(row.at("t")) >= t1) {
      worst = std::max(worst, std::stod(row.at("value")));
      ++n;
    }
  v.require(q["hypothesis_ok"].get<bool>(), "hypotheses at t = 0");
  v.require(q["pass"].get<bool>() && n > 0 && worst < 0.0, "interior lambda_max " + num(worst));
  v.note("t1 = 0.01/K = " + num(t1) + ", " + std::to_string(n) + " records after t1, max interior lambda_max " +
         num(worst));
  return v;
}

Verdict rescaling() {
  Verdict v;
  const models::Model m = models::nonkahler_perturbed(GridSpec::periodic(2, 16));
  TensorField scaled = m.g0.tensor();
  scaled *= 1.0 / kRescaleL;
  const MetricField g0s(scaled);
  FlowConfig base;
  base.t_end = 0.004;
  base.cadence = 1000;
  base.record_pinching = false;
  base.keep_trajectory = false;
  FlowConfig resc = base;
  resc.t_end = base.t_end / kRescaleL;
  const RunResult a = run({0.0, m.g0, m.g0}, base);
  const RunResult b = run({0.0, g0s, g0s}, resc);
  TensorField ga = a.final.g.tensor();
  ga *= 1.0 / kRescaleL;
  const double rel = sup_abs(ga - b.final.g.tensor()) / sup_abs(ga);
  v.require(a.steps == b.steps, "step counts differ");
  v.require(rel <= kRescaleTol, "relative mismatch " + num(rel));
  v.note("L = 4, " + std::to_string(a.steps) + " steps, relative mismatch " + num(rel));
  return v;
}

Verdict exhaustion() {
  Verdict v;
  const Run& r = bundled("exhaustion");
  const json& list = r.reports["exhaustion"];
  for (double kappa : kKappas) {
    const json* e = nullptr;
    for (const auto& x : list)
      if (std::abs(x["kappa"].get<double>() - kappa) < 1e-15) e = &x;
    const std::string k = "kappa " + num(kappa);
    if (!e) {
      v.require(false, k + " missing");
      continue;
    }
    v.require((*e)["F_zero_on_flat_part"].get<bool>(), k + " F != 0 on the flat part");
    v.require((*e)["min_dF"].get<double>() >= 0.0, k + " F' < 0");
    bool finite = true;
    for (const auto& s : (*e)["sup_weighted_derivatives"]) finite = finite && std::isfinite(s.get<double>());
    v.require(finite && (*e)["sup_weighted_derivatives"].size() == 3, k + " weighted sup not finite");
    const double th = (*e)["rho0_threshold"], rho0 = (*e)["rho0"], mx = (*e)["rho0_max"];
    v.require(std::isfinite(th) && th <= mx && rho0 >= th && (*e)["pass"].get<bool>(),
              k + " bound 2K0 at rho0 " + num(rho0));
    const auto& w = (*e)["sup_weighted_derivatives"];
    v.note(k + ": sup e^{-kF}F^(k) = " + num(w[0].get<double>()) + ", " + num(w[1].get<double>()) + ", " +
           num(w[2].get<double>()) + "; threshold rho0 " + num(th));
  }
  v.require(r.seconds < kExhaustionSeconds, "runtime " + num(r.seconds) + " s");
  v.note(num(r.seconds) + " s");
  return v;
}

Verdict shi_everywhere() {
  Verdict v;
  // every bundled config that evolves a metric; exhaustion.conf has no trajectory
  const std::vector<std::pair<std::string, std::function<const Run&()>>> runs = {
      {"flat", []() -> const Run& { return bundled("flat"); }},
      {"poincare", []() -> const Run& { return bundled("poincare", {"flow", "monitors"}, "monitors"); }},
      {"product", []() -> const Run& { return bundled("product"); }},
      {"kahler", []() -> const Run& { return bundled("kahler"); }},
      {"conformal_bump", []() -> const Run& { return bundled("conformal_bump"); }},
      {"nonkahler", []() -> const Run& { return bundled("nonkahler", {"flow", "monitors"}, "flow"); }},
  };
  for (const auto& [name, get] : runs) {
    const Run& r = get();
    for (const char* m : {"shi_m1", "shi_m2"}) {
      const json& s = monitor(r, m);
      v.require(s["pass"].get<bool>(), name + " " + m);
    }
    v.note(name + " median " + num(monitor(r, "shi_m1")["measured"].get<double>()));
  }
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 3) {
    std::cerr << "usage: acceptance <configs dir> <scratch dir>\n";
    return 2;
  }
  g_configs = argv[1];
  g_out = argv[2];
  fs::create_directories(g_out);

  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"flat fixed point", flat_fixed_point},
      {"identity suite", identity_suite},
      {"two-formula Ricci agreement", ricci_formulas},
      {"Kähler-Einstein oracle", ke_oracle},
      {"Kähler persistence", kahler_persistence},
      {"evolution-equation residuals", evolution_suite},
      {"preserved Ric and pinching monitors", sign_monitors},
      {"quasi-negative conformal bump", quasi_negative},
      {"parabolic rescaling", rescaling},
      {"exhaustion suite", exhaustion},
      {"Shi monitor on bundled runs", shi_everywhere},
  };
  int passed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("error: ") + e.what();
    }
    passed += v.pass;
    std::cout << "criterion " << std::setw(2) << i + 1 << " " << (v.pass ? "PASS" : "FAIL") << "  "
              << criteria[i].first << ": " << v.detail << std::endl;
  }
  std::cout << "acceptance: " << passed << "/" << criteria.size() << " criteria pass" << std::endl;
  return passed == static_cast<int>(criteria.size()) ? 0 : 1;
}
