#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "hrf/analysis.hpp"
#include "hrf/cli.hpp"
#include "hrf/verify.hpp"

namespace hrf::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool has(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

std::string num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

json num_json(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

void write_residual_rows(std::ostream& os, const std::string& suite, const std::string& name,
                         const ResidualReport& r) {
  for (std::size_t k = 0; k < r.resolutions.size(); ++k)
    os << suite << ',' << name << ',' << r.resolutions[k] << ',' << num(r.residuals[k]) << ','
       << (k == 0 ? "nan" : num(r.orders[k - 1])) << ',' << (k < r.scales.size() ? num(r.scales[k]) : "nan") << ','
       << num(r.tolerance) << ',' << (r.pass ? 1 : 0) << '\n';
  for (const auto& s : r.sub) write_residual_rows(os, suite, name + "/" + s.name, s);
}

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// Interior relative error of g against (1 + λt) g0.
double ke_relative_error(const MetricField& g, const TensorField& want) {
  const GridSpec& spec = g.spec();
  const int lo = spec.interior_lo(), hi = spec.interior_hi();
  const TensorField d = g.tensor() - want;
  double err = 0.0;
  for_each_index(spec, d.mask(), [&](const Index& idx) {
    for (int a = 0; a < spec.axes(); ++a)
      if (d.active(a) && (idx[a] < lo || idx[a] >= hi)) return;
    double num = 0.0, den = 0.0;
    for (int c = 0; c < d.comps(); ++c) {
      num = std::max(num, std::abs(d.value(idx, c)));
      den = std::max(den, std::abs(want.value(idx, c)));
    }
    err = std::max(err, num / den);
  });
  return err;
}

struct Context {
  const ExperimentConfig& cfg;
  fs::path dir;
  std::ostream& log;
  json reports;
  std::ofstream residuals;
  bool all_pass = true;
  int status = kExitOk;
  RunResult flow;
  bool flow_done = false;
};

void suite_flow(Context& cx) {
  const auto& c = cx.cfg;
  Timer tm;
  const models::Model m = build_model(c, c.N);
  FlowConfig f = flow_config(c, m);
  f.keep_trajectory = true;
  std::ofstream diag(cx.dir / "diagnostics.csv");
  write_diagnostics_header(diag);
  cx.flow = run({0.0, m.g0, m.g0}, f, [&](const DiagnosticsRecord& r) {
    write_diagnostics_row(diag, r);
    diag.flush();
  });
  cx.flow_done = true;
  int saved = 0;
  if (c.snapshots) {
    fs::create_directories(cx.dir / "snapshots");
    for (const auto& p : cx.flow.trajectory) {
      char name[32];
      std::snprintf(name, sizeof name, "g_%05d.bin", saved++);
      save_snapshot((cx.dir / "snapshots" / name).string(), p.g.tensor(), p.t);
    }
  }
  json j;
  j["model"] = m.name;
  j["halt"] = to_string(cx.flow.halt);
  j["message"] = cx.flow.message;
  j["steps"] = cx.flow.steps;
  j["t_final"] = cx.flow.final.t;
  j["snapshots"] = saved;
  j["pass"] = cx.flow.halt == HaltReason::Completed;
  cx.reports["flow"] = j;
  if (cx.flow.halt != HaltReason::Completed) {
    cx.status = kExitGuard;
    cx.log << "flow: halted (" << to_string(cx.flow.halt) << "): " << cx.flow.message << "\n";
  }
  cx.log << "flow: " << cx.flow.steps << " steps to t = " << cx.flow.final.t << " (" << tm.seconds() << " s)\n";
}

void suite_monitors(Context& cx) {
  const auto& c = cx.cfg;
  Timer tm;
  const TrajectoryView& tr = cx.flow.trajectory;
  const MetricField& g0 = tr.front().g;
  std::vector<MonitorSeries> series;
  json refused = json::array();
  auto attempt = [&](const std::string& name, const std::function<MonitorSeries()>& fn) {
    try {
      series.push_back(fn());
    } catch (const Error& e) {
      refused.push_back({{"monitor", name}, {"reason", e.what()}});
      cx.log << "monitors: " << name << " refused: " << e.what() << "\n";
    }
  };
  attempt("shi_m1", [&] { return shi_monitor(tr, 1); });
  attempt("shi_m2", [&] { return shi_monitor(tr, 2); });
  attempt("equivalence", [&] { return equivalence_monitor(tr, g0, c.equivalence_eps); });
  attempt("preserved_ricci", [&] { return preserved_ricci_monitor(tr, c.seed); });
  attempt("pinching", [&] { return pinching_monitor(tr, {}, c.pinching_cap, c.seed); });
  attempt("quasi_negative", [&] { return quasi_negative_monitor(tr, c.monitor_margin, c.monitor_t1, c.seed); });
  std::ofstream os(cx.dir / "monitors.csv");
  write_monitor_csv(os, series);
  json list = json::array();
  for (const auto& s : series) {
    list.push_back({{"name", s.name},
                    {"pass", s.pass},
                    {"hypothesis_ok", s.hypothesis_ok},
                    {"threshold", num_json(s.threshold)},
                    {"parameter", num_json(s.parameter)},
                    {"measured", num_json(s.measured)},
                    {"note", s.note}});
    // equivalence only reports a first-exceed time; a failed hypothesis voids the verdict
    if (s.name != "equivalence" && s.hypothesis_ok && !s.pass) cx.all_pass = false;
  }
  cx.reports["monitors"] = {{"series", list}, {"refused", refused}};
  cx.log << "monitors: " << series.size() << " series, " << refused.size() << " refused (" << tm.seconds()
         << " s)\n";
}

void suite_ke(Context& cx) {
  const auto& c = cx.cfg;
  Timer tm;
  json j;
  std::ofstream os(cx.dir / "ke_convergence.csv");
  os << "N,h,steps,t_end,rel_error,lambda_measured\n";
  const models::Model fine = build_model(c, c.N);
  if (!(fine.einstein_lambda > 0.0) || !fine.exact) {
    j["pass"] = false;
    j["reason"] = "model " + fine.name + " is not a Kähler-Einstein model with a known solution";
    cx.reports["ke"] = j;
    cx.all_pass = false;
    return;
  }
  const double lambda = fine.einstein_lambda;
  std::vector<double> errs;
  double lambda_measured = 0.0;
  for (int N : {c.N / 2, c.N}) {
    const models::Model m = build_model(c, N);
    const RicciExtremes e = ricci_extremes(build_stack(m.g0));
    const double lm = -e.global_max;
    FlowConfig f = flow_config(c, m);
    f.boundary = BoundarySource::Exact;
    f.exact = m.exact;
    f.keep_trajectory = false;
    f.record_pinching = false;
    f.cadence = 1 << 30;
    const RunResult r = run({0.0, m.g0, m.g0}, f);
    const double err = ke_relative_error(r.final.g, m.exact(r.final.t));
    errs.push_back(err);
    lambda_measured = lm;
    os << N << ',' << num(1.0 / N) << ',' << r.steps << ',' << num(r.final.t) << ',' << num(err) << ',' << num(lm)
       << '\n';
  }
  const double ratio = errs[0] / errs[1];
  j["lambda_model"] = lambda;
  j["lambda_measured"] = lambda_measured;
  j["resolutions"] = {c.N / 2, c.N};
  j["rel_errors"] = errs;
  j["order"] = std::log2(ratio);
  j["pass"] = errs[1] <= 1e-4 && ratio >= 8.0 && std::abs(lambda_measured - lambda) <= 0.01 * lambda;
  if (!j["pass"].get<bool>()) cx.all_pass = false;
  cx.reports["ke"] = j;
  cx.log << "ke: errors " << errs[0] << " -> " << errs[1] << ", lambda " << lambda_measured << " (" << tm.seconds()
         << " s)\n";
}

void record(Context& cx, const std::string& suite, const ResidualReport& r) {
  cx.reports[suite].push_back(to_json(r));
  write_residual_rows(cx.residuals, suite, r.name, r);
  if (!r.pass) cx.all_pass = false;
  cx.log << suite << ": " << r.name << " sup " << r.sup_residual << " order " << r.min_order()
         << (r.pass ? " PASS" : " FAIL") << "\n";
}

void suite_identities(Context& cx) {
  const auto& c = cx.cfg;
  const MetricGen gen = [&c](int N) { return build_model(c, N).g0; };
  const MetricGen ref = [&c](int N) {
    const GridSpec spec = grid_spec(c, N);
    return c.reference == "flat" ? models::flat(spec).g0 : models::kahler_potential(spec, models::kBundledKahlerEps).g0;
  };
  cx.reports["identities"] = json::array();
  record(cx, "identities", check_commutation(gen, c.resolutions));
  record(cx, "identities", check_torsion_bianchi(gen, c.resolutions));
  record(cx, "identities", check_parabolic_form(gen, ref, c.resolutions));
  record(cx, "identities", check_ricci_formulas(gen, c.resolutions));
}

void suite_evolution(Context& cx) {
  const auto& c = cx.cfg;
  const auto traj = [&c](int N) {
    const models::Model m = build_model(c, N);
    const double h = 1.0 / N;
    return make_trajectory(m.g0, 0.1 * h * h, 9, 1, flow_config(c, m));
  };
  cx.reports["evolution"] = json::array();
  for (auto kind : {EvolutionKind::Trace, EvolutionKind::Psi, EvolutionKind::Rm, EvolutionKind::Ric,
                    EvolutionKind::Higher})
    record(cx, "evolution", check_evolution(traj, c.evolution_resolutions, kind));
}

void suite_exhaustion(Context& cx) {
  const auto& c = cx.cfg;
  Timer tm;
  const int N = c.exhaustion_N > 0 ? c.exhaustion_N : c.N;
  const models::Model m = build_model(c, N);
  const ChernStack base = build_stack(m.g0);
  const ScalarField rho = radial_exhaustion(m.g0.spec(), c.beta);
  std::ofstream os(cx.dir / "exhaustion.csv");
  os << "kappa,rho0,K0,sup_bound,bound_2K0,pass,rho0_threshold,rho0_max,F_zero_on_flat_part,min_dF,"
        "sup_w1,sup_w2,sup_w3,quadrature_change,c2,c3\n";
  std::ofstream prof(cx.dir / "exhaustion_profile.csv");
  prof << "kappa,s,f,phi,F,dF,d2F,d3F\n";
  cx.reports["exhaustion"] = json::array();
  for (double kappa : c.kappas) {
    const ExhaustionProfile p(kappa);
    const ExhaustionCheck e = exhaustion_curvature_check(p, c.rho0, rho, base);
    const auto& s = e.sampling;
    const bool flat_ok = s.min_F_on_flat == 0.0 && s.max_F_on_flat == 0.0;
    os << num(kappa) << ',' << num(e.rho0) << ',' << num(e.k0) << ',' << num(e.sup_bound) << ',' << num(2.0 * e.k0)
       << ',' << (e.pass ? 1 : 0) << ',' << num(e.threshold) << ',' << num(e.rho_max) << ',' << (flat_ok ? 1 : 0)
       << ',' << num(s.min_dF) << ',' << num(s.sup_weighted[0]) << ',' << num(s.sup_weighted[1]) << ','
       << num(s.sup_weighted[2]) << ',' << num(s.quadrature_change) << ',' << num(s.c2) << ',' << num(s.c3) << '\n';
    for (int k = 0; k < 1000; ++k) {
      const double x = k / 1000.0;
      prof << num(kappa) << ',' << num(x) << ',' << num(p.f(x)) << ',' << num(p.phi(x)) << ',' << num(p.F(x)) << ','
           << num(p.F(x, 1)) << ',' << num(p.F(x, 2)) << ',' << num(p.F(x, 3)) << '\n';
    }
    json j = to_json(e);
    j["base"] = m.name;
    j["beta"] = c.beta;
    cx.reports["exhaustion"].push_back(j);
    const bool ok = e.pass && flat_ok && s.min_dF >= 0.0 && std::isfinite(e.threshold);
    if (!ok) cx.all_pass = false;
    cx.log << "exhaustion: kappa " << kappa << " threshold " << e.threshold << (ok ? " PASS" : " FAIL") << "\n";
  }
  cx.log << "exhaustion: " << tm.seconds() << " s\n";
}

}  // namespace

std::vector<std::string> expected_files(const std::vector<std::string>& suites) {
  std::vector<std::string> out = {"config.txt", "reports.json"};
  if (has(suites, "flow") || has(suites, "monitors")) out.push_back("diagnostics.csv");
  if (has(suites, "monitors")) out.push_back("monitors.csv");
  if (has(suites, "ke")) out.push_back("ke_convergence.csv");
  if (has(suites, "identities") || has(suites, "evolution")) out.push_back("residuals.csv");
  if (has(suites, "exhaustion")) {
    out.push_back("exhaustion.csv");
    out.push_back("exhaustion_profile.csv");
  }
  return out;
}

int run_experiment(const ExperimentConfig& cfg, std::ostream& log) {
  validate(cfg);
  Context cx{cfg, fs::path(cfg.out), log, json::object(), {}, true, kExitOk, {}, false};
  fs::create_directories(cx.dir);
  {
    std::ofstream os(cx.dir / "config.txt");
    os << to_text(cfg);
  }
  cx.reports["schema"] = kSchemaVersion;
  cx.reports["seed"] = cfg.seed;
  const auto& s = cfg.suites;
  if (has(s, "identities") || has(s, "evolution")) {
    cx.residuals.open(cx.dir / "residuals.csv");
    cx.residuals << "suite,report,N,residual,order,scale,tolerance,pass\n";
  }
  auto write_reports = [&] {
    std::ofstream os(cx.dir / "reports.json");
    os << cx.reports.dump(2) << "\n";
  };
  try {
    if (has(s, "flow") || has(s, "monitors")) suite_flow(cx);
    if (has(s, "monitors")) {
      if (cx.flow.trajectory.empty())
        log << "monitors: skipped, the flow kept no trajectory\n";
      else
        suite_monitors(cx);
    }
    if (has(s, "ke")) suite_ke(cx);
    if (has(s, "identities")) suite_identities(cx);
    if (has(s, "evolution")) suite_evolution(cx);
    if (has(s, "exhaustion")) suite_exhaustion(cx);
  } catch (...) {
    // partial artifacts stay on disk
    write_reports();
    throw;
  }
  write_reports();
  if (cx.status != kExitOk) return cx.status;
  return cx.all_pass ? kExitOk : kExitFail;
}

}  // namespace hrf::cli
