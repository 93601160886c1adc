#include "hrf/flow.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "hrf/tensor.hpp"

namespace hrf {

void FlowConfig::validate() const {
  if (!(cfl > 0.0 && cfl <= kMaxCfl))
    throw Error("flow: cfl must lie in (0, 0.5] (got " + std::to_string(cfl) + ")");
  if (!(t_end >= 0.0)) throw Error("flow: t_end must be >= 0");
  if (dt < 0.0) throw Error("flow: dt must be >= 0");
  if (cadence < 1) throw Error("flow: cadence must be >= 1");
  if (boundary == BoundarySource::Exact && !exact)
    throw Error("flow: exact boundary requested but the model has no exact solution");
}

TensorField rhs(const MetricField& g) {
  auto [lam, where] = g.min_eigenvalue();
  if (!(lam > 0.0)) throw PositivityError("rhs: metric not positive-definite", where, lam);
  // Same assembly as build_stack, without the fields S does not need.
  const TensorField dbar_g = gradient(g.tensor(), false);
  const TensorField gamma = contract(g.inverse(), 1, gradient(g.tensor(), true), 2);
  TensorField rm_lo = gradient(dbar_g, true);
  rm_lo *= -1.0;
  rm_lo += permute(contract(gamma, 0, dbar_g, 1), {0, 2, 1, 3});
  TensorField s = metric_trace(rm_lo, 0, 1, g.inverse());
  s *= -1.0;
  return s;
}

double cfl_dt(const MetricField& g, double cfl) {
  const double h = g.spec().h();
  return cfl * h * h / g.max_inverse_eigenvalue();
}

void apply_boundary(TensorField& g, const MetricField& g0, double t, const FlowConfig& cfg) {
  const GridSpec& spec = g.spec();
  if (spec.boundary != Boundary::Frozen) return;
  const TensorField src = cfg.boundary == BoundarySource::Exact ? cfg.exact(t) : g0.tensor();
  if ((src.mask() | g.mask()) != g.mask()) g = g.broadcast_to(src.mask());
  const int nc = g.comps();
  std::size_t lin = 0;
  for_each_index(spec, g.mask(), [&](const Index& idx) {
    const std::size_t p = lin++;
    if (!spec.in_shell(idx, g.mask())) return;
    std::copy_n(src.at(src.offset(idx)), nc, g.at(p));
  });
}

namespace {

MetricField make_stage(TensorField g, const MetricField& g0, double t, const FlowConfig& cfg,
                       const char* stage) {
  hermitize(g);
  apply_boundary(g, g0, t, cfg);
  MetricField m(std::move(g));
  auto [lam, where] = m.min_eigenvalue();
  if (!(lam > cfg.positivity_floor)) {
    std::ostringstream os;
    os << "flow: positivity floor breached at " << stage << " (t=" << t << "): min eigenvalue "
       << lam << " at (" << where[0] << "," << where[1] << "," << where[2] << "," << where[3]
       << ")";
    throw PositivityError(os.str(), where, lam);
  }
  return m;
}

TensorField axpy(const TensorField& g, double a, const TensorField& k) {
  TensorField x = k;
  x *= a;
  return g + x;
}

}  // namespace

FlowState step(const FlowState& s, double dt, const FlowConfig& cfg) {
  const double h = s.g.spec().h();
  const double limit = kMaxCfl * h * h / s.g.max_inverse_eigenvalue();
  if (dt > limit * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "flow: dt " << dt << " exceeds the stability limit " << limit;
    throw CflError(os.str(), dt, limit);
  }
  const TensorField& g = s.g.tensor();
  const double th = s.t + 0.5 * dt, t1 = s.t + dt;
  const TensorField k1 = rhs(s.g);
  const TensorField k2 = rhs(make_stage(axpy(g, 0.5 * dt, k1), s.g0, th, cfg, "stage 2"));
  const TensorField k3 = rhs(make_stage(axpy(g, 0.5 * dt, k2), s.g0, th, cfg, "stage 3"));
  const TensorField k4 = rhs(make_stage(axpy(g, dt, k3), s.g0, t1, cfg, "stage 4"));
  TensorField sum = k2 + k3;
  sum *= 2.0;
  sum += k1;
  sum += k4;
  FlowState out;
  out.t = t1;
  out.g = make_stage(axpy(g, dt / 6.0, sum), s.g0, t1, cfg, "update");
  out.g0 = s.g0;
  return out;
}

double equivalence_defect(const MetricField& g, const MetricField& g0) {
  const int n = g.n();
  const ScalarField e = map_points(
      g.spec(), valence::scalar(),
      [n](cplx* o, const cplx* a, const cplx* b) {
        const auto ev = linalg::pencil_eigenvalues(n, a, b);  // eigenvalues of g0⁻¹g
        o[0] = std::max(ev[n - 1], 1.0 / ev[0]) - 1.0;
      },
      g.tensor(), g0.tensor());
  return sup_real(e);
}

namespace {

double sup_grad_norm(const TensorField& q, const ChernStack& st) {
  ScalarField a = norm2(covariant_derivative(q, st.gamma, Direction::Hol), st.g);
  a += norm2(covariant_derivative(q, st.gamma, Direction::Antihol), st.g);
  return std::sqrt(std::max(0.0, sup_real(a)));
}

}  // namespace

DiagnosticsRecord diagnose(const FlowState& s, long step_no, double dt, std::uint64_t seed,
                           bool pinching) {
  const ChernStack st = build_stack(s.g);
  DiagnosticsRecord r;
  r.step = step_no;
  r.t = s.t;
  r.dt = dt;
  r.sup_rm = sup_norm(st.rm_lo, st.g);
  const double tn = sup_norm(st.torsion, st.g);
  r.sup_t2 = tn * tn;
  r.sup_grad_rm = sup_grad_norm(st.rm_lo, st);
  r.sup_grad_t = sup_grad_norm(st.torsion, st);
  const RicciExtremes ex = ricci_extremes(st);
  r.ric_min = ex.global_min;
  r.ric_max = ex.global_max;
  r.pinching = std::numeric_limits<double>::quiet_NaN();
  if (pinching) {
    std::mt19937_64 rng(seed + static_cast<std::uint64_t>(step_no));
    try {
      r.pinching = pinching_ratio(st, rng).ratio;
    } catch (const ProbeError&) {
    }
  }
  r.equivalence = equivalence_defect(s.g, s.g0);
  r.min_eig = s.g.min_eigenvalue().first;
  return r;
}

void write_diagnostics_header(std::ostream& os) {
  os << "step,t,dt,sup_rm,sup_t2,sup_grad_rm,sup_grad_t,ric_min,ric_max,pinching,equivalence,"
        "min_eig\n";
}

void write_diagnostics_row(std::ostream& os, const DiagnosticsRecord& r) {
  os << std::setprecision(17) << r.step << ',' << r.t << ',' << r.dt << ',' << r.sup_rm << ','
     << r.sup_t2 << ',' << r.sup_grad_rm << ',' << r.sup_grad_t << ',' << r.ric_min << ','
     << r.ric_max << ',';
  if (std::isnan(r.pinching))
    os << "nan";
  else
    os << r.pinching;
  os << ',' << r.equivalence << ',' << r.min_eig << '\n';
}

std::string to_string(HaltReason h) {
  switch (h) {
    case HaltReason::Completed: return "completed";
    case HaltReason::Positivity: return "positivity";
    case HaltReason::Cfl: return "cfl";
    case HaltReason::NonFinite: return "non_finite";
  }
  return "unknown";
}

RunResult run(const FlowState& init, const FlowConfig& cfg,
              const std::function<void(const DiagnosticsRecord&)>& on_record) {
  cfg.validate();
  RunResult res;
  FlowState s = init;
  long k = 0;
  double last_dt = 0.0;
  auto record = [&] {
    res.records.push_back(diagnose(s, k, last_dt, cfg.seed, cfg.record_pinching));
    if (on_record) on_record(res.records.back());
    if (cfg.keep_trajectory) res.trajectory.push_back({s.t, s.g});
  };
  record();
  long last_recorded = 0;
  const double eps = 1e-12 * std::max(1.0, cfg.t_end);
  while (s.t < cfg.t_end - eps) {
    double dt = cfg.dt > 0.0 ? cfg.dt : cfl_dt(s.g, cfg.cfl);
    if (s.t + dt > cfg.t_end) dt = cfg.t_end - s.t;
    try {
      s = step(s, dt, cfg);
    } catch (const CflError& e) {
      res.halt = HaltReason::Cfl;
      res.message = e.what();
      break;
    } catch (const PositivityError& e) {
      res.halt = HaltReason::Positivity;
      res.message = e.what();
      break;
    }
    ++k;
    last_dt = dt;
    bool finite = true;
    for (const cplx& v : s.g.tensor().data())
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
        finite = false;
        break;
      }
    if (!finite) {
      res.halt = HaltReason::NonFinite;
      res.message = "flow: non-finite metric sample after step " + std::to_string(k);
      break;
    }
    if (k % cfg.cadence == 0) {
      record();
      last_recorded = k;
    }
  }
  if (last_recorded != k && res.halt == HaltReason::Completed) record();
  res.steps = k;
  res.final = s;
  return res;
}

}  // namespace hrf
