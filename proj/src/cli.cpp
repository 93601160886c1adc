#include "hrf/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>

namespace hrf::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');)
    if (!trim(item).empty()) out.push_back(trim(item));
  return out;
}

[[noreturn]] void fail(const ExperimentConfig& c, const std::string& key, const std::string& what) {
  const auto it = c.lines.find(key);
  std::string where = c.source;
  if (it != c.lines.end()) where += ":" + std::to_string(it->second);
  throw ConfigError(where + ": " + key + ": " + what);
}

template <class T>
T parse_number(const ExperimentConfig& c, const std::string& key, const std::string& v) {
  T out{};
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) fail(c, key, "expected a number, got '" + v + "'");
  return out;
}

bool parse_bool(const ExperimentConfig& c, const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  fail(c, key, "expected true or false, got '" + v + "'");
}

std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) os << ", ";
    if constexpr (std::is_floating_point_v<T>)
      os << fmt(v[i]);
    else
      os << v[i];
  }
  return os.str();
}

const std::vector<std::string> kSuites = {"flow", "monitors", "ke", "identities", "evolution", "exhaustion"};
const std::vector<std::string> kModels = {"flat",
                                          "conformal_bump",
                                          "poincare",
                                          "complex_hyperbolic",
                                          "product_flat_poincare",
                                          "kahler_potential",
                                          "nonkahler_perturbed",
                                          "from_file"};

bool one_of(const std::string& v, const std::vector<std::string>& allowed) {
  return std::find(allowed.begin(), allowed.end(), v) != allowed.end();
}

}  // namespace

ExperimentConfig parse_config(std::istream& is, const std::string& source) {
  ExperimentConfig c;
  c.source = source;
  using Setter = std::function<void(const std::string& key, const std::string& v)>;
  auto num = [&c](auto& field) {
    return Setter([&c, &field](const std::string& k, const std::string& v) {
      field = parse_number<std::remove_reference_t<decltype(field)>>(c, k, v);
    });
  };
  auto str = [](std::string& field) { return Setter([&field](const std::string&, const std::string& v) { field = v; }); };
  auto flag = [&c](bool& field) {
    return Setter([&c, &field](const std::string& k, const std::string& v) { field = parse_bool(c, k, v); });
  };
  auto ints = [&c](std::vector<int>& field) {
    return Setter([&c, &field](const std::string& k, const std::string& v) {
      field.clear();
      for (const auto& item : split_list(v)) field.push_back(parse_number<int>(c, k, item));
    });
  };
  const std::map<std::string, Setter> setters = {
      {"n", num(c.n)},
      {"N", num(c.N)},
      {"boundary",
       [&c](const std::string& k, const std::string& v) {
         if (v == "frozen")
           c.boundary = Boundary::Frozen;
         else if (v == "periodic")
           c.boundary = Boundary::Periodic;
         else
           fail(c, k, "expected frozen or periodic, got '" + v + "'");
       }},
      {"inset", num(c.inset)},
      {"model", str(c.model.kind)},
      {"model.amplitude", num(c.model.amplitude)},
      {"model.width", num(c.model.width)},
      {"model.center_x", num(c.model.center_x)},
      {"model.center_y", num(c.model.center_y)},
      {"model.radius", num(c.model.radius)},
      {"model.eps", num(c.model.eps)},
      {"model.potential", str(c.model.potential)},
      {"model.path", str(c.model.path)},
      {"flow.cfl", num(c.cfl)},
      {"flow.t_end", num(c.t_end)},
      {"flow.dt", num(c.dt)},
      {"flow.boundary_source", str(c.boundary_source)},
      {"flow.cadence", num(c.cadence)},
      {"flow.positivity_floor", num(c.positivity_floor)},
      {"flow.record_pinching", flag(c.record_pinching)},
      {"flow.snapshots", flag(c.snapshots)},
      {"suites",
       [&c](const std::string&, const std::string& v) { c.suites = split_list(v); }},
      {"verify.resolutions", ints(c.resolutions)},
      {"verify.evolution_resolutions", ints(c.evolution_resolutions)},
      {"verify.reference", str(c.reference)},
      {"monitor.margin", num(c.monitor_margin)},
      {"monitor.t1", num(c.monitor_t1)},
      {"monitor.equivalence_eps", num(c.equivalence_eps)},
      {"monitor.pinching_cap", num(c.pinching_cap)},
      {"exhaustion.kappa",
       [&c](const std::string& k, const std::string& v) {
         c.kappas.clear();
         for (const auto& item : split_list(v)) {
           // allow 1/16 style fractions
           const auto slash = item.find('/');
           if (slash == std::string::npos) {
             c.kappas.push_back(parse_number<double>(c, k, item));
           } else {
             const double a = parse_number<double>(c, k, trim(item.substr(0, slash)));
             const double b = parse_number<double>(c, k, trim(item.substr(slash + 1)));
             c.kappas.push_back(a / b);
           }
         }
       }},
      {"exhaustion.beta", num(c.beta)},
      {"exhaustion.rho0", num(c.rho0)},
      {"exhaustion.N", num(c.exhaustion_N)},
      {"out", str(c.out)},
      {"seed", num(c.seed)},
  };

  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(source + ":" + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end())
      throw ConfigError(source + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    if (c.lines.count(key))
      throw ConfigError(source + ":" + std::to_string(lineno) + ": " + key + ": duplicate key (first set on line " +
                        std::to_string(c.lines[key]) + ")");
    c.lines[key] = lineno;
    it->second(key, value);
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError(path + ": cannot open config");
  return parse_config(is, path);
}

std::string to_text(const ExperimentConfig& c) {
  std::ostringstream os;
  os << "n = " << c.n << "\nN = " << c.N << "\nboundary = " << to_string(c.boundary) << "\ninset = " << fmt(c.inset)
     << "\nmodel = " << c.model.kind << "\nmodel.amplitude = " << fmt(c.model.amplitude)
     << "\nmodel.width = " << fmt(c.model.width) << "\nmodel.center_x = " << fmt(c.model.center_x)
     << "\nmodel.center_y = " << fmt(c.model.center_y) << "\nmodel.radius = " << fmt(c.model.radius)
     << "\nmodel.eps = " << fmt(c.model.eps) << "\nmodel.potential = " << c.model.potential;
  if (!c.model.path.empty()) os << "\nmodel.path = " << c.model.path;
  os << "\nflow.cfl = " << fmt(c.cfl) << "\nflow.t_end = " << fmt(c.t_end) << "\nflow.dt = " << fmt(c.dt)
     << "\nflow.boundary_source = " << c.boundary_source << "\nflow.cadence = " << c.cadence
     << "\nflow.positivity_floor = " << fmt(c.positivity_floor)
     << "\nflow.record_pinching = " << (c.record_pinching ? "true" : "false")
     << "\nflow.snapshots = " << (c.snapshots ? "true" : "false") << "\nsuites = " << join(c.suites)
     << "\nverify.resolutions = " << join(c.resolutions)
     << "\nverify.evolution_resolutions = " << join(c.evolution_resolutions)
     << "\nverify.reference = " << c.reference << "\nmonitor.margin = " << fmt(c.monitor_margin)
     << "\nmonitor.t1 = " << fmt(c.monitor_t1) << "\nmonitor.equivalence_eps = " << fmt(c.equivalence_eps)
     << "\nmonitor.pinching_cap = " << fmt(c.pinching_cap) << "\nexhaustion.kappa = " << join(c.kappas)
     << "\nexhaustion.beta = " << fmt(c.beta) << "\nexhaustion.rho0 = " << fmt(c.rho0)
     << "\nexhaustion.N = " << c.exhaustion_N << "\nout = " << c.out << "\nseed = " << c.seed << "\n";
  return os.str();
}

GridSpec grid_spec(const ExperimentConfig& c, int N) {
  GridSpec s = c.boundary == Boundary::Frozen ? GridSpec::frozen(c.n, N) : GridSpec::periodic(c.n, N);
  return s.with_inset(c.inset);
}

models::Model build_model(const ExperimentConfig& c, int N) {
  const GridSpec spec = grid_spec(c, N);
  spec.validate();
  const auto& m = c.model;
  if (m.kind == "flat") return models::flat(spec);
  if (m.kind == "conformal_bump") return models::conformal_bump(spec, m.amplitude, m.width);
  if (m.kind == "poincare") return models::poincare(spec, m.center_x, m.center_y, m.radius);
  if (m.kind == "complex_hyperbolic") return models::complex_hyperbolic(spec);
  if (m.kind == "product_flat_poincare") return models::product_flat_poincare(spec, m.radius);
  if (m.kind == "kahler_potential")
    return models::kahler_potential(spec, m.eps,
                                    m.potential == "mixed" ? models::Potential::Mixed : models::Potential::Trig);
  if (m.kind == "nonkahler_perturbed") return models::nonkahler_perturbed(spec, m.eps);
  if (m.kind == "from_file") {
    models::Model out = models::from_file(m.path);
    if (out.g0.spec().n != c.n || out.g0.spec().N != N || out.g0.spec().boundary != c.boundary)
      throw GridError("from_file: snapshot grid (n=" + std::to_string(out.g0.spec().n) +
                      ", N=" + std::to_string(out.g0.spec().N) + ", " + to_string(out.g0.spec().boundary) +
                      ") does not match the configured grid");
    return out;
  }
  throw Error("unknown model '" + m.kind + "'");
}

FlowConfig flow_config(const ExperimentConfig& c, const models::Model& m) {
  FlowConfig f;
  f.cfl = c.cfl;
  f.t_end = c.t_end;
  f.dt = c.dt;
  f.cadence = c.cadence;
  f.positivity_floor = c.positivity_floor;
  f.record_pinching = c.record_pinching;
  f.seed = c.seed;
  if (c.boundary_source == "exact") {
    f.boundary = BoundarySource::Exact;
    f.exact = m.exact;
  }
  return f;
}

void validate(const ExperimentConfig& c) {
  if (c.n != 1 && c.n != 2) fail(c, "n", "complex dimension must be 1 or 2 (got " + std::to_string(c.n) + ")");
  try {
    grid_spec(c, c.N).validate();
  } catch (const GridError& e) {
    fail(c, c.lines.count("inset") && !c.lines.count("N") ? "inset" : "N", e.what());
  }
  if (!one_of(c.model.kind, kModels)) fail(c, "model", "unknown model '" + c.model.kind + "'");
  if (c.model.kind == "from_file" && c.model.path.empty()) fail(c, "model.path", "required for model = from_file");
  if (c.model.kind == "kahler_potential" && c.model.potential != "trig" && c.model.potential != "mixed")
    fail(c, "model.potential", "unknown potential '" + c.model.potential + "' (available: trig, mixed)");
  if (c.model.kind == "conformal_bump" && !(c.model.width > 0.0)) fail(c, "model.width", "must be positive");
  if (c.model.kind == "conformal_bump" && !(c.model.amplitude >= 0.0))
    fail(c, "model.amplitude", "must be non-negative (u must stay plurisubharmonic)");
  if (!(c.cfl > 0.0 && c.cfl <= kMaxCfl)) fail(c, "flow.cfl", "must lie in (0, " + fmt(kMaxCfl) + "]");
  if (!(c.t_end >= 0.0)) fail(c, "flow.t_end", "must be non-negative");
  if (!(c.dt >= 0.0)) fail(c, "flow.dt", "must be non-negative");
  if (c.cadence < 1) fail(c, "flow.cadence", "must be at least 1");
  if (c.boundary_source != "hold" && c.boundary_source != "exact")
    fail(c, "flow.boundary_source", "expected hold or exact, got '" + c.boundary_source + "'");
  if (c.suites.empty()) fail(c, "suites", "at least one suite is required");
  for (const auto& s : c.suites)
    if (!one_of(s, kSuites)) fail(c, "suites", "unknown suite '" + s + "'");
  auto check_res = [&c](const std::vector<int>& v, const std::string& key, std::size_t min_count) {
    if (v.size() < min_count) fail(c, key, "need at least " + std::to_string(min_count) + " resolutions");
    for (std::size_t i = 0; i < v.size(); ++i) {
      try {
        grid_spec(c, v[i]).validate();
      } catch (const GridError& e) {
        fail(c, key, e.what());
      }
      if (i && v[i] != 2 * v[i - 1]) fail(c, key, "resolutions must double");
    }
  };
  check_res(c.resolutions, "verify.resolutions", 2);
  check_res(c.evolution_resolutions, "verify.evolution_resolutions", 2);
  if (c.reference != "flat" && c.reference != "kahler_potential")
    fail(c, "verify.reference", "expected flat or kahler_potential, got '" + c.reference + "'");
  if (!(c.monitor_margin >= 0.0 && c.monitor_margin < 0.5)) fail(c, "monitor.margin", "must lie in [0, 0.5)");
  if (!(c.equivalence_eps > 0.0)) fail(c, "monitor.equivalence_eps", "must be positive");
  if (!(c.pinching_cap > 0.0)) fail(c, "monitor.pinching_cap", "must be positive");
  for (double k : c.kappas)
    if (!(k > 0.0 && k < 0.125)) fail(c, "exhaustion.kappa", "kappa must lie in (0, 1/8), got " + fmt(k));
  if (!(c.beta > 0.0)) fail(c, "exhaustion.beta", "must be positive");
  if (!(c.rho0 >= 1.0)) fail(c, "exhaustion.rho0", "must be >= 1");
  if (c.exhaustion_N != 0) {
    try {
      grid_spec(c, c.exhaustion_N).validate();
    } catch (const GridError& e) {
      fail(c, "exhaustion.N", e.what());
    }
  }
  if (c.out.empty()) fail(c, "out", "must not be empty");
  // generator parameters must give a positive-definite metric on the patch
  try {
    build_model(c, c.N).g0.validate(c.positivity_floor);
  } catch (const Error& e) {
    fail(c, "model", e.what());
  }
}

}  // namespace hrf::cli
