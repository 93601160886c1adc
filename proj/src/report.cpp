#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include "hrf/analysis.hpp"
#include "hrf/cli.hpp"

namespace hrf::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using Row = std::map<std::string, std::string>;

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  for (std::string cell; std::getline(ss, cell, ',');) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::vector<Row> read_csv(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open");
  std::string line;
  if (!std::getline(is, line) || line.empty()) throw Error("empty file");
  const auto header = split(line);
  std::vector<Row> rows;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size())
      throw Error("line " + std::to_string(lineno) + ": expected " + std::to_string(header.size()) + " fields, got " +
                  std::to_string(cells.size()));
    Row r;
    for (std::size_t i = 0; i < cells.size(); ++i) r[header[i]] = cells[i];
    rows.push_back(std::move(r));
  }
  return rows;
}

double field(const Row& r, const std::string& key) {
  const auto it = r.find(key);
  if (it == r.end()) throw Error("missing column '" + key + "'");
  try {
    std::size_t used = 0;
    const double v = std::stod(it->second, &used);
    if (used != it->second.size()) throw Error("");
    return v;
  } catch (const std::exception&) {
    throw Error("column '" + key + "': not a number: '" + it->second + "'");
  }
}

json num_json(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

std::string fmt(double x, int prec = 4) {
  std::ostringstream os;
  os << std::setprecision(prec) << x;
  return os.str();
}

const std::vector<std::string> kAllSuites = {"flow", "monitors", "ke", "identities", "evolution", "exhaustion"};

json summarize_diagnostics(const std::vector<Row>& rows, std::ostringstream& txt) {
  if (rows.empty()) throw Error("no rows");
  json j;
  const Row& first = rows.front();
  const Row& last = rows.back();
  j["records"] = rows.size();
  j["steps"] = field(last, "step");
  j["t_final"] = field(last, "t");
  double worst = 0.0;
  for (const auto& r : rows)
    for (const char* k : {"sup_rm", "sup_t2", "sup_grad_rm", "sup_grad_t", "ric_min", "ric_max"})
      worst = std::max(worst, std::abs(field(r, k)));
  j["max_abs_curvature"] = worst;
  j["all_zero"] = worst <= 1e-12;
  for (const char* k : {"sup_rm", "sup_t2", "ric_min", "ric_max", "min_eig"}) {
    j["initial"][k] = field(first, k);
    j["final"][k] = field(last, k);
  }
  // Einstein constant: Ric = −λ g when the two extreme eigenvalues agree
  const double lo = field(first, "ric_min"), hi = field(first, "ric_max");
  const bool einstein = hi < 0.0 && std::abs(hi - lo) <= 0.01 * std::abs(hi);
  j["lambda"] = einstein ? json(-hi) : json(nullptr);
  txt << "flow: " << rows.size() << " records, step " << field(last, "step") << ", t = " << fmt(field(last, "t"), 6)
      << "\n";
  if (worst <= 1e-12)
    txt << "  all curvature diagnostics zero (max " << fmt(worst) << ")\n";
  else
    txt << "  sup|Rm| " << fmt(field(first, "sup_rm")) << " -> " << fmt(field(last, "sup_rm")) << ", Ric in ["
        << fmt(lo) << ", " << fmt(hi) << "] -> [" << fmt(field(last, "ric_min")) << ", "
        << fmt(field(last, "ric_max")) << "]\n";
  if (einstein) txt << "  Einstein constant lambda = " << fmt(-hi, 6) << " (from ric_max at t = 0)\n";
  // torsion growth over the recorded steps (Kähler persistence reads this)
  double t_max = 0.0;
  for (const auto& r : rows) t_max = std::max(t_max, std::sqrt(std::max(0.0, field(r, "sup_t2"))));
  const double t_0 = std::sqrt(std::max(0.0, field(first, "sup_t2")));
  j["torsion_initial"] = t_0;
  j["torsion_max"] = t_max;
  if (worst > 1e-12)
    txt << "  sup|T| " << fmt(t_0) << " at t = 0, max " << fmt(t_max) << " over the records\n";
  return j;
}

json summarize_residuals(const std::vector<Row>& rows, std::ostringstream& txt, bool& pass) {
  // keep first-seen order
  std::vector<std::pair<std::string, std::string>> keys;
  std::map<std::pair<std::string, std::string>, std::vector<const Row*>> groups;
  for (const auto& r : rows) {
    const auto key = std::make_pair(r.at("suite"), r.at("report"));
    if (!groups.count(key)) keys.push_back(key);
    groups[key].push_back(&r);
  }
  json out = json::array();
  for (const auto& key : keys) {
    const auto& g = groups[key];
    json j;
    j["suite"] = key.first;
    j["report"] = key.second;
    std::vector<int> Ns;
    std::vector<double> res, orders;
    for (const Row* r : g) {
      Ns.push_back(static_cast<int>(field(*r, "N")));
      res.push_back(field(*r, "residual"));
      if (r != g.front()) orders.push_back(field(*r, "order"));
    }
    double min_order = orders.empty() ? NAN : orders.front();
    for (double o : orders) min_order = std::min(min_order, o);
    const bool ok = field(*g.back(), "pass") == 1.0;
    j["resolutions"] = Ns;
    j["residuals"] = res;
    j["min_order"] = num_json(min_order);
    j["finest_residual"] = res.back();
    j["tolerance"] = field(*g.back(), "tolerance");
    j["pass"] = ok;
    const bool top_level = key.second.find('/') == std::string::npos;
    if (top_level && !ok) pass = false;
    txt << "  " << (top_level ? "" : "  ") << key.first << "/" << key.second << ": finest " << fmt(res.back())
        << ", order " << fmt(min_order, 3) << (ok ? "  PASS" : "  FAIL") << "\n";
    out.push_back(j);
  }
  return out;
}

}  // namespace

Summary summarize(const std::string& dir_str) {
  Summary s;
  const fs::path dir(dir_str);
  std::ostringstream txt;
  json& j = s.json;
  j["dir"] = dir_str;
  bool pass = true;

  std::vector<std::string> suites;
  if (!fs::is_directory(dir)) {
    s.problems.push_back("not a directory: " + dir_str);
  } else if (!fs::exists(dir / "config.txt")) {
    s.problems.push_back("missing config.txt; a run leaves " + [] {
      std::string all;
      for (const auto& f : expected_files(kAllSuites)) all += (all.empty() ? "" : ", ") + f;
      return all;
    }());
  } else {
    try {
      const ExperimentConfig c = load_config((dir / "config.txt").string());
      suites = c.suites;
      j["schema"] = kSchemaVersion;
      j["seed"] = c.seed;
      j["model"] = c.model.kind;
      j["grid"] = {{"n", c.n}, {"N", c.N}, {"boundary", to_string(c.boundary)}};
    } catch (const Error& e) {
      s.problems.push_back(std::string("corrupt config.txt: ") + e.what());
    }
  }
  j["suites"] = suites;
  txt << "run: " << dir_str << "\n";
  if (j.contains("model"))
    txt << "model " << j["model"].get<std::string>() << ", n = " << j["grid"]["n"] << ", N = " << j["grid"]["N"]
        << ", seed " << j["seed"] << "\n";

  auto present = [&](const std::string& name) {
    if (fs::exists(dir / name)) return true;
    s.problems.push_back("missing " + name);
    return false;
  };
  auto guarded = [&](const std::string& name, const std::function<void()>& fn) {
    if (!present(name)) return;
    try {
      fn();
    } catch (const std::exception& e) {
      s.problems.push_back("corrupt " + name + ": " + e.what());
    }
  };
  auto has = [&](const char* suite) { return std::find(suites.begin(), suites.end(), suite) != suites.end(); };

  json reports;
  if (!suites.empty())
    guarded("reports.json", [&] {
      std::ifstream is(dir / "reports.json");
      reports = json::parse(is);
    });

  if (has("flow") || has("monitors"))
    guarded("diagnostics.csv", [&] { j["flow"] = summarize_diagnostics(read_csv(dir / "diagnostics.csv"), txt); });
  if (reports.contains("flow") && !reports["flow"].value("pass", false)) {
    pass = false;
    txt << "  flow halted: " << reports["flow"].value("message", std::string()) << "\n";
  }

  if (has("monitors"))
    guarded("monitors.csv", [&] {
      std::ifstream is(dir / "monitors.csv");
      auto series = read_monitor_csv(is);
      json list = json::array();
      txt << "monitors:\n";
      for (auto& m : series) {
        recompute_verdict(m);
        list.push_back({{"name", m.name},
                        {"pass", m.pass},
                        {"hypothesis_ok", m.hypothesis_ok},
                        {"parameter", num_json(m.parameter)},
                        {"measured", num_json(m.measured)},
                        {"final_value", m.value.back()}});
        if (m.name != "equivalence" && m.hypothesis_ok && !m.pass) pass = false;
        txt << "  " << m.name << ": ";
        if (m.name == "equivalence")
          txt << (m.pass ? "within" : "exceeds") << " eps = " << fmt(m.threshold);
        else if (!m.hypothesis_ok)
          txt << "hypothesis not met (verdict does not apply)";
        else
          txt << (m.pass ? "PASS" : "FAIL");
        if (m.name == "pinching") txt << ", c2 = " << fmt(m.measured) << ", K = " << fmt(m.parameter);
        if (m.name == "equivalence")
          txt << (std::isnan(m.measured) ? ", never exceeded" : ", first exceeded at t = " + fmt(m.measured));
        if (m.name == "shi_m1" || m.name == "shi_m2") txt << ", median " << fmt(m.measured);
        if (m.name == "quasi_negative") txt << ", t1 = " << fmt(m.parameter);
        txt << "\n";
      }
      j["monitors"] = list;
      if (reports.contains("monitors"))
        for (const auto& r : reports["monitors"]["refused"]) {
          txt << "  " << r["monitor"].get<std::string>() << ": refused (" << r["reason"].get<std::string>() << ")\n";
          j["refused"].push_back(r);
        }
    });

  if (has("ke"))
    guarded("ke_convergence.csv", [&] {
      const auto rows = read_csv(dir / "ke_convergence.csv");
      if (rows.size() != 2) throw Error("expected two resolutions");
      const double e0 = field(rows[0], "rel_error"), e1 = field(rows[1], "rel_error");
      const double lam = field(rows[1], "lambda_measured");
      json k;
      k["lambda"] = lam;
      k["rel_errors"] = {e0, e1};
      k["order"] = std::log2(e0 / e1);
      const bool ok = reports.contains("ke") && reports["ke"].value("pass", false);
      k["pass"] = ok;
      if (!ok) pass = false;
      j["ke"] = k;
      txt << "ke: lambda = " << fmt(lam, 6) << ", rel error " << fmt(e0) << " -> " << fmt(e1) << ", order "
          << fmt(std::log2(e0 / e1), 3) << (ok ? "  PASS" : "  FAIL") << "\n";
    });

  if (has("identities") || has("evolution"))
    guarded("residuals.csv", [&] {
      txt << "residuals:\n";
      j["residuals"] = summarize_residuals(read_csv(dir / "residuals.csv"), txt, pass);
    });

  if (has("exhaustion")) {
    guarded("exhaustion.csv", [&] {
      json list = json::array();
      for (const auto& r : read_csv(dir / "exhaustion.csv")) {
        const bool ok = field(r, "pass") == 1.0 && field(r, "F_zero_on_flat_part") == 1.0 &&
                        field(r, "min_dF") >= 0.0 && std::isfinite(field(r, "rho0_threshold"));
        if (!ok) pass = false;
        list.push_back({{"kappa", field(r, "kappa")},
                        {"rho0_threshold", num_json(field(r, "rho0_threshold"))},
                        {"K0", field(r, "K0")},
                        {"sup_weighted", {field(r, "sup_w1"), field(r, "sup_w2"), field(r, "sup_w3")}},
                        {"pass", ok}});
        txt << "exhaustion: kappa " << fmt(field(r, "kappa")) << ", rho0 threshold " << fmt(field(r, "rho0_threshold"))
            << ", sup e^-kF F^(k) = " << fmt(field(r, "sup_w1")) << ", " << fmt(field(r, "sup_w2")) << ", "
            << fmt(field(r, "sup_w3")) << (ok ? "  PASS" : "  FAIL") << "\n";
      }
      j["exhaustion"] = list;
    });
    present("exhaustion_profile.csv");
  }

  if (!s.problems.empty()) {
    pass = false;
    txt << "problems:\n";
    for (const auto& p : s.problems) txt << "  " << p << "\n";
  }
  j["problems"] = s.problems;
  j["pass"] = pass;
  txt << "overall: " << (pass ? "PASS" : "FAIL") << "\n";
  s.text = txt.str();
  return s;
}

int report(const std::string& dir, std::ostream& out) {
  const Summary s = summarize(dir);
  out << s.text;
  if (fs::is_directory(dir)) {
    std::ofstream(fs::path(dir) / "summary.txt") << s.text;
    std::ofstream(fs::path(dir) / "summary.json") << s.json.dump(2) << "\n";
  }
  return s.json["pass"].get<bool>() ? kExitOk : kExitFail;
}

}  // namespace hrf::cli
