#include "hrf/verify.hpp"

#include <algorithm>
#include <cmath>

#include "hrf/models.hpp"
#include "hrf/tensor.hpp"

namespace hrf {

double ResidualReport::min_order() const {
  if (orders.empty()) return std::nan("");
  return *std::min_element(orders.begin(), orders.end());
}

nlohmann::json to_json(const ResidualReport& r) {
  nlohmann::json j;
  j["name"] = r.name;
  j["resolutions"] = r.resolutions;
  j["residuals"] = r.residuals;
  j["orders"] = r.orders;
  j["scales"] = r.scales;
  j["sup_residual"] = r.sup_residual;
  j["tolerance"] = r.tolerance;
  j["pass"] = r.pass;
  j["time_dominated"] = r.time_dominated;
  if (!r.note.empty()) j["note"] = r.note;
  if (!r.sub.empty()) {
    j["sub"] = nlohmann::json::array();
    for (const auto& s : r.sub) j["sub"].push_back(to_json(s));
  }
  return j;
}

double truncation_tolerance(const TensorField& f) {
  const double h = f.spec().h();
  return std::max(1e-12, 50.0 * std::pow(h, 4) * sixth_derivative_scale(f));
}

std::vector<double> observed_orders(const std::vector<double>& r) {
  std::vector<double> out;
  for (std::size_t i = 1; i < r.size(); ++i) out.push_back(std::log2(r[i - 1] / r[i]));
  return out;
}

namespace {

// [∇_i, ∇_j̄]Q as (i, j̄, ...).
TensorField commutator(const TensorField& q, const TensorField& gamma) {
  const TensorField a =
      covariant_derivative(covariant_derivative(q, gamma, Direction::Antihol), gamma, Direction::Hol);
  const TensorField b =
      covariant_derivative(covariant_derivative(q, gamma, Direction::Hol), gamma, Direction::Antihol);
  std::vector<int> perm(a.valence().rank());
  for (int k = 0; k < static_cast<int>(perm.size()); ++k) perm[k] = k;
  std::swap(perm[0], perm[1]);
  return a - permute(b, perm);
}

}  // namespace

TensorField commutation_test_field(const GridSpec& spec, Slot slot, double phase) {
  const int n = spec.n;
  const std::uint8_t mask = n == 1 ? 0b0011 : 0b0111;
  return models::sample(spec, Valence{slot}, mask, [n, phase](const models::Coords& c, cplx* o) {
    const double tp = 2.0 * M_PI;
    o[0] = cplx(std::sin(tp * c[0] + phase) + 0.3 * std::cos(tp * c[1]),
                0.5 * std::cos(tp * (c[0] + c[1])));
    if (n == 2) {
      o[0] += 0.2 * std::sin(tp * c[2]);
      o[1] = cplx(0.4 * std::cos(tp * c[2] - phase), std::sin(tp * (c[1] + c[2])));
    }
  });
}

CommutationResiduals commutation_residuals(const ChernStack& st) {
  const auto& spec = st.spec();
  return commutation_residuals(st, commutation_test_field(spec, Slot::Up, 0.0),
                               commutation_test_field(spec, Slot::Lo, 0.7),
                               commutation_test_field(spec, Slot::UpBar, 1.3),
                               commutation_test_field(spec, Slot::LoBar, 2.1));
}

CommutationResiduals commutation_residuals(const ChernStack& st, const TensorField& x,
                                           const TensorField& a, const TensorField& xb,
                                           const TensorField& ab) {
  const auto& g = st.g;
  CommutationResiduals r;
  // W = R_{i j̄}{}^{l̄}{}_{k̄}
  const TensorField w = raise(st.rm_lo, 2, g.inverse());

  r.vector = sup_norm(commutator(x, st.gamma) - contract(st.rm, 2, x, 0), g);

  r.form = sup_norm(commutator(a, st.gamma) + contract(st.rm, 3, a, 0), g);

  r.vector_bar = sup_norm(commutator(xb, st.gamma) + contract(w, 3, xb, 0), g);

  r.form_bar = sup_norm(commutator(ab, st.gamma) - contract(w, 2, ab, 0), g);
  return r;
}

const std::array<const char*, 6> kBianchiNames = {
    "swap_i_k", "swap_j_l", "swap_pairs_first", "swap_pairs_second", "second_hol", "second_antihol"};

BianchiResiduals torsion_bianchi_residuals(const ChernStack& st) {
  const auto& g = st.g;
  const TensorField& r = st.rm_lo;
  const TensorField tb_lo = st.torsion_lo.conj();  // T_{j̄ l̄ k}
  const TensorField dbar_t = covariant_derivative(st.torsion_lo, st.gamma, Direction::Antihol);
  const TensorField d_tb = covariant_derivative(tb_lo, st.gamma, Direction::Hol);
  BianchiResiduals out;
  auto put = [&](int k, const TensorField& side, const TensorField& rest) {
    out.side[k] = sup_norm(side, g);
    out.residual[k] = sup_norm(side + rest, g);
  };
  // R_{ij̄kl̄} − R_{kj̄il̄} = −∇_j̄ T_{ikl̄}
  put(0, r - permute(r, {2, 1, 0, 3}), permute(dbar_t, {1, 0, 2, 3}));
  // R_{ij̄kl̄} − R_{il̄kj̄} = −∇_i T_{j̄l̄k}
  put(1, r - permute(r, {0, 3, 2, 1}), permute(d_tb, {0, 1, 3, 2}));
  // R_{ij̄kl̄} − R_{kl̄ij̄} = −∇_j̄ T_{ikl̄} − ∇_k T_{j̄l̄i}
  const TensorField pair_swap = r - permute(r, {2, 3, 0, 1});
  put(2, pair_swap, permute(dbar_t, {1, 0, 2, 3}) + permute(d_tb, {3, 1, 0, 2}));
  // ... = −∇_i T_{j̄l̄k} − ∇_l̄ T_{ikj̄}
  put(3, pair_swap, permute(d_tb, {0, 1, 3, 2}) + permute(dbar_t, {1, 3, 2, 0}));
  // ∇_p R_{ij̄kl̄} − ∇_i R_{pj̄kl̄} = −T^r_{pi} R_{rj̄kl̄}
  const TensorField dr = covariant_derivative(r, st.gamma, Direction::Hol);
  put(4, dr - permute(dr, {1, 0, 2, 3, 4}), contract(st.torsion, 0, r, 0));
  // ∇_q̄ R_{ij̄kl̄} − ∇_j̄ R_{iq̄kl̄} = −T^{s̄}_{q̄j̄} R_{is̄kl̄}
  const TensorField dbr = covariant_derivative(r, st.gamma, Direction::Antihol);
  put(5, dbr - permute(dbr, {2, 1, 0, 3, 4}),
      permute(contract(st.torsion.conj(), 0, r, 1), {0, 2, 1, 3, 4}));
  return out;
}

double parabolic_form_residual(const MetricField& g, const MetricField& g0) {
  const ChernStack st0 = build_stack(g0);
  const TensorField& gt = g.tensor();
  const TensorField& ginv = g.inverse();
  const TensorField dg = covariant_derivative(gt, st0.gamma, Direction::Hol);       // (k, i, q̄)
  const TensorField dbg = covariant_derivative(gt, st0.gamma, Direction::Antihol);  // (l̄, p, j̄)
  // ½ g^{kl̄}(∇̃_k∇̃_l̄ + ∇̃_l̄∇̃_k) g_{ij̄}
  TensorField rhs = metric_trace(covariant_derivative(dbg, st0.gamma, Direction::Hol), 0, 1, ginv);
  rhs += metric_trace(covariant_derivative(dg, st0.gamma, Direction::Antihol), 1, 0, ginv);
  rhs *= 0.5;
  // − g^{kl̄} g^{pq̄} (∇̃_k g_{iq̄})(∇̃_l̄ g_{pj̄})
  rhs -= metric_trace(contract(raise(dg, 2, ginv), 2, dbg, 1), 0, 2, ginv);
  // − ½ (g^{kl̄} g_{pj̄} R̃_{kl̄i}^p + g^{kl̄} g_{iq̄} R̃_{kl̄}^{q̄}_{j̄})
  TensorField curv = metric_trace(lower(st0.rm, 3, gt), 0, 1, ginv);
  curv += metric_trace(lower(raise(st0.rm_lo, 2, g0.inverse()), 2, gt), 0, 1, ginv);
  curv *= 0.5;
  rhs -= curv;
  return sup_norm(rhs + build_stack(g).s, g);
}

double ricci_formula_residual(const MetricField& g) {
  return sup_norm(build_stack(g).ric - first_ricci_from_det(g), g);
}


namespace {

struct Sample {
  std::vector<double> residual;  // one per named part
  std::vector<double> side;
  double tolerance = 0.0;
};

ResidualReport make_report(const std::string& name, const std::vector<int>& Ns,
                           const std::vector<Sample>& samples,
                           const std::vector<std::string>& parts) {
  ResidualReport top;
  top.name = name;
  top.resolutions = Ns;
  top.tolerance = samples.back().tolerance;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    ResidualReport r;
    r.name = parts[k];
    r.resolutions = Ns;
    for (const auto& s : samples) {
      r.residuals.push_back(s.residual[k]);
      r.scales.push_back(s.side.empty() ? 0.0 : s.side[k]);
    }
    r.orders = observed_orders(r.residuals);
    r.sup_residual = r.residuals.back();
    r.tolerance = top.tolerance;
    r.pass = r.sup_residual <= r.tolerance;
    top.sub.push_back(r);
  }
  for (const auto& s : samples) {
    top.residuals.push_back(*std::max_element(s.residual.begin(), s.residual.end()));
    top.scales.push_back(s.side.empty() ? 0.0 : *std::max_element(s.side.begin(), s.side.end()));
  }
  if (parts.size() == 1) top.sub.clear();
  top.orders = observed_orders(top.residuals);
  top.sup_residual = top.residuals.back();
  top.pass = top.sup_residual <= top.tolerance;
  return top;
}

}  // namespace

ResidualReport check_commutation(const MetricGen& gen, const std::vector<int>& Ns) {
  std::vector<Sample> samples;
  for (int N : Ns) {
    const MetricField g = gen(N);
    const auto r = commutation_residuals(build_stack(g));
    samples.push_back({{r.vector, r.form, r.vector_bar, r.form_bar}, {}, truncation_tolerance(g.tensor())});
  }
  return make_report("commutation", Ns, samples, {"vector", "form", "vector_bar", "form_bar"});
}

ResidualReport check_torsion_bianchi(const MetricGen& gen, const std::vector<int>& Ns) {
  std::vector<Sample> samples;
  for (int N : Ns) {
    const MetricField g = gen(N);
    const auto r = torsion_bianchi_residuals(build_stack(g));
    samples.push_back({{r.residual.begin(), r.residual.end()},
                       {r.side.begin(), r.side.end()},
                       truncation_tolerance(g.tensor())});
  }
  return make_report("torsion_bianchi", Ns, samples, {kBianchiNames.begin(), kBianchiNames.end()});
}

ResidualReport check_parabolic_form(const MetricGen& gen, const MetricGen& gen0,
                                    const std::vector<int>& Ns) {
  std::vector<Sample> samples;
  for (int N : Ns) {
    const MetricField g = gen(N), g0 = gen0(N);
    samples.push_back({{parabolic_form_residual(g, g0)},
                       {sup_norm(build_stack(g).s, g)},
                       // the reference connection's stencils contribute too
                       std::max(truncation_tolerance(g.tensor()), truncation_tolerance(g0.tensor()))});
  }
  return make_report("parabolic_form", Ns, samples, {"parabolic_form"});
}

ResidualReport check_ricci_formulas(const MetricGen& gen, const std::vector<int>& Ns) {
  std::vector<Sample> samples;
  for (int N : Ns) {
    const MetricField g = gen(N);
    samples.push_back({{ricci_formula_residual(g)}, {}, truncation_tolerance(g.tensor())});
  }
  return make_report("ricci_formulas", Ns, samples, {"ricci_formulas"});
}

std::string to_string(EvolutionKind k) {
  switch (k) {
    case EvolutionKind::Trace: return "trace";
    case EvolutionKind::Psi: return "psi";
    case EvolutionKind::Rm: return "rm";
    case EvolutionKind::Ric: return "ric";
    case EvolutionKind::Higher: return "higher";
  }
  return "?";
}

Trajectory make_trajectory(const MetricField& g0, double spacing, int count, int substeps,
                           const FlowConfig& cfg) {
  if (count < 5) throw Error("trajectory: need at least 5 snapshots, got " + std::to_string(count));
  if (!(spacing > 0.0) || substeps < 1) throw Error("trajectory: spacing and substeps must be positive");
  Trajectory tr;
  tr.g0 = g0;
  tr.dt = spacing;
  FlowState s{0.0, g0, g0};
  const double dt = spacing / substeps;
  for (int k = 0; k < count; ++k) {
    tr.g.push_back(s.g);
    if (k + 1 == count) break;
    for (int j = 0; j < substeps; ++j) s = step(s, dt, cfg);
  }
  return tr;
}

TensorField time_derivative(const std::vector<TensorField>& q, double dt) {
  if (q.size() != 5) throw Error("time_derivative: need exactly 5 samples");
  TensorField d = q[0] - q[4];
  d += 8.0 * (q[3] - q[1]);
  d *= 1.0 / (12.0 * dt);
  return d;
}

ScalarField inner_re(const TensorField& a, const TensorField& b, const MetricField& g) {
  ScalarField out = norm2(a + b, g) - norm2(a - b, g);
  out *= 0.25;
  return out;
}

namespace {

TensorField swap01(const TensorField& f) {
  std::vector<int> perm(f.valence().rank());
  for (int k = 0; k < static_cast<int>(perm.size()); ++k) perm[k] = k;
  std::swap(perm[0], perm[1]);
  return permute(f, perm);
}

// |∇Q|² + |∇̄Q|² and the four second-derivative orderings.
ScalarField full_grad2(const TensorField& q, const TensorField& gamma, const MetricField& g) {
  return norm2(covariant_derivative(q, gamma, Direction::Hol), g) +
         norm2(covariant_derivative(q, gamma, Direction::Antihol), g);
}

ScalarField full_hess2(const TensorField& q, const TensorField& gamma, const MetricField& g) {
  const TensorField d = covariant_derivative(q, gamma, Direction::Hol);
  const TensorField db = covariant_derivative(q, gamma, Direction::Antihol);
  return full_grad2(d, gamma, g) + full_grad2(db, gamma, g);
}

// Quantities whose time derivative is taken.
std::vector<TensorField> quantities(EvolutionKind kind, const ChernStack& st, const ChernStack& st0) {
  const MetricField& g = st.g;
  switch (kind) {
    case EvolutionKind::Trace: return {metric_trace(st0.g.tensor(), 0, 1, g.inverse())};
    case EvolutionKind::Psi: return {norm2(st0.gamma - st.gamma, g)};
    case EvolutionKind::Rm: return {st.rm_lo};
    case EvolutionKind::Ric: return {st.ric};
    case EvolutionKind::Higher:
      return {covariant_derivative(st.rm_lo, st.gamma, Direction::Hol),
              covariant_derivative(st.torsion, st.gamma, Direction::Hol)};
  }
  return {};
}

// g^{rs̄} T^p_{ri} ∇_s̄ Q_{p j̄ ...} + g^{rs̄} T^{q̄}_{s̄j̄} ∇_r Q_{i q̄ ...} + g^{rs̄} T T Q,
// for Q with leading slots (Lo, LoBar).
TensorField torsion_terms(const TensorField& q, const ChernStack& st) {
  const TensorField& ginv = st.g.inverse();
  const TensorField tb = st.torsion.conj();
  const TensorField dq = covariant_derivative(q, st.gamma, Direction::Hol);
  const TensorField dbq = covariant_derivative(q, st.gamma, Direction::Antihol);
  // (r, i, s̄, j̄, ...) → (i, j̄, ...)
  TensorField out = metric_trace(contract(st.torsion, 0, dbq, 1), 0, 2, ginv);
  // (s̄, j̄, r, i, ...) → (j̄, i, ...)
  out += swap01(metric_trace(contract(tb, 0, dq, 2), 2, 0, ginv));
  const TensorField tq = contract(st.torsion, 0, q, 0);  // (r, i, q̄, ...)
  out += swap01(metric_trace(contract(tb, 0, tq, 2), 2, 0, ginv));
  return out;
}

EvolutionResult evaluate(const std::vector<const std::vector<TensorField>*>& q, const ChernStack& st,
                         const ChernStack& st0, double dt, EvolutionKind kind, LaplacianOrder order) {
  const MetricField& g = st.g;
  const TensorField& ginv = g.inverse();
  auto series = [&](int k) {
    std::vector<TensorField> v;
    for (const auto* p : q) v.push_back((*p)[k]);
    return v;
  };
  auto lap = [&](const TensorField& f) { return laplacian(f, st.gamma, ginv, order); };
  EvolutionResult r;
  const TensorField& mid = (*q[2])[0];
  const TensorField dq = time_derivative(series(0), dt);
  r.scale = sup_norm(dq, g);
  r.tolerance = truncation_tolerance(mid);
  switch (kind) {
    case EvolutionKind::Trace: {
      const TensorField psi = st0.gamma - st.gamma;
      const TensorField pp = contract(lower(psi, 0, st0.g.tensor()), 0, psi.conj(), 0);  // (k, i, l̄, j̄)
      const TensorField t1 = metric_trace(metric_trace(pp, 0, 2, ginv), 0, 1, ginv);
      const TensorField t2 = metric_trace(metric_trace(st0.rm_lo, 0, 1, ginv), 0, 1, ginv);
      r.residual = sup_norm(dq - lap(mid) + t1 - t2, g);
      break;
    }
    case EvolutionKind::Psi: {
      const TensorField psi = st0.gamma - st.gamma;
      const ScalarField grads = full_grad2(psi, st.gamma, g);
      const TensorField tr_rm = metric_trace(contract(st.torsion, 0, st.rm, 0), 0, 2, ginv);  // (i, k, r)
      const TensorField v = tr_rm + metric_trace(covariant_derivative(st0.rm, st.gamma, Direction::Hol), 0, 2, ginv);
      ScalarField cross = inner_re(v, permute(psi, {1, 2, 0}), g);
      cross *= 2.0;
      r.residual = sup_norm(dq - lap(mid) + grads - cross, g);
      // g^{pq̄} ∇_p R_{iq̄k}^r = ∇_i S_k^r − g^{pq̄} T^s_{pi} R_{sq̄k}^r
      const TensorField lhs = metric_trace(covariant_derivative(st.rm, st.gamma, Direction::Hol), 0, 2, ginv);
      const TensorField ds = covariant_derivative(raise(st.s, 1, ginv), st.gamma, Direction::Hol);
      r.sub_residual = sup_norm(lhs - ds + tr_rm, g);
      break;
    }
    case EvolutionKind::Rm: {
      const TensorField& rl = st.rm_lo;
      const TensorField& rm = st.rm;
      TensorField rhs = lap(mid) + torsion_terms(rl, st);
      rhs += metric_trace(contract(rm, 3, rl, 0), 2, 3, ginv);
      rhs += permute(metric_trace(contract(rm, 3, rl, 2), 0, 4, ginv), {2, 0, 1, 3});
      rhs -= permute(metric_trace(contract(rl, 2, rm, 3), 0, 4, ginv), {2, 0, 3, 1});
      const TensorField s_up = raise(st.s, 1, ginv);   // S_i^p
      const TensorField s_bar = raise(st.s, 0, ginv);  // S^{q̄}_{j̄}
      TensorField sterm = contract(s_up, 1, rl, 0);
      sterm += permute(contract(s_up, 1, rl, 2), {1, 2, 0, 3});
      sterm += swap01(contract(s_bar, 0, rl, 1));
      sterm += permute(contract(s_bar, 0, rl, 3), {1, 2, 3, 0});
      sterm *= 0.5;
      rhs -= sterm;
      r.residual = sup_norm(dq - rhs, g);
      break;
    }
    case EvolutionKind::Ric: {
      const TensorField& ric = st.ric;
      TensorField rhs = lap(mid) + torsion_terms(ric, st);
      rhs += trace(contract(st.rm, 3, raise(ric, 1, ginv), 0), 2, 3);
      TensorField sterm = contract(raise(st.s, 1, ginv), 1, ric, 0);
      sterm += swap01(contract(raise(st.s, 0, ginv), 0, ric, 1));
      sterm *= 0.5;
      rhs -= sterm;
      r.residual = sup_norm(dq - rhs, g);
      // ∂_t Ric = ∂_i ∂_j̄ (g^{kl̄} S_{kl̄})
      const TensorField trs = metric_trace(st.s, 0, 1, ginv);
      r.sub_residual = sup_norm(dq - gradient(gradient(trs, false), true), g);
      break;
    }
    case EvolutionKind::Higher: {
      const TensorField dqt = time_derivative(series(1), dt);
      const TensorField& drm = mid;
      const TensorField& dt_ = (*q[2])[1];
      const TensorField lhs_r = dq - lap(drm);
      const TensorField lhs_t = dqt - lap(dt_);
      r.residual = std::max(sup_norm(lhs_r, g), sup_norm(lhs_t, g));
      r.scale = std::max(r.scale, sup_norm(dqt, g));
      r.tolerance = 10.0;
      const ScalarField nt = norm2(st.torsion, g), nrm = norm2(st.rm_lo, g);
      const ScalarField ndt = full_grad2(st.torsion, st.gamma, g);
      const ScalarField ndrm = full_grad2(st.rm_lo, st.gamma, g);
      const ScalarField nd2t = full_hess2(st.torsion, st.gamma, g);
      const ScalarField nd2rm = full_hess2(st.rm_lo, st.gamma, g);
      auto sq = [](const cplx* p) { return std::sqrt(std::max(0.0, p[0].real())); };
      const ScalarField br = map_points(
          st.spec(), valence::scalar(),
          [&](cplx* o, const cplx* a, const cplx* b, const cplx* c, const cplx* d, const cplx* e) {
            const double t = sq(a), dt1 = sq(b), rmv = sq(c), drv = sq(d), d2r = sq(e);
            o[0] = t * d2r + dt1 * drv + 2.0 * rmv * drv + t * t * drv + 2.0 * t * dt1 * rmv;
          },
          nt, ndt, nrm, ndrm, nd2rm);
      const ScalarField bt = map_points(
          st.spec(), valence::scalar(),
          [&](cplx* o, const cplx* a, const cplx* b, const cplx* c, const cplx* d, const cplx* e) {
            const double t = sq(a), dt1 = sq(b), d2t = sq(c), rmv = sq(d), drv = sq(e);
            o[0] = 2.0 * t * d2t + dt1 * dt1 + t * drv + dt1 * rmv;
          },
          nt, ndt, nd2t, nrm, ndrm);
      const double cr = sup_norm(lhs_r, g) / std::max(sup_real(br), 1e-300);
      const double ct = sup_norm(lhs_t, g) / std::max(sup_real(bt), 1e-300);
      r.calibration = std::max(cr, ct);
      break;
    }
  }
  return r;
}

}  // namespace

EvolutionResult evolution_residual(const Trajectory& tr, EvolutionKind kind, LaplacianOrder order) {
  const int m = static_cast<int>(tr.g.size());
  if (m < 5) throw Error("evolution check: need at least 5 snapshots, got " + std::to_string(m));
  const ChernStack st0 = build_stack(tr.g0);
  std::vector<std::vector<TensorField>> cache(m);
  auto get = [&](int k) -> const std::vector<TensorField>* {
    if (cache[k].empty()) cache[k] = quantities(kind, build_stack(tr.g[k]), st0);
    return &cache[k];
  };
  const int mid = m >= 9 ? 4 : 2;
  const ChernStack st = build_stack(tr.g[mid]);
  EvolutionResult r = evaluate({get(mid - 2), get(mid - 1), get(mid), get(mid + 1), get(mid + 2)}, st, st0,
                               tr.dt, kind, order);
  if (m >= 9) {
    const EvolutionResult r2 = evaluate({get(0), get(2), get(4), get(6), get(8)}, st, st0, 2.0 * tr.dt, kind, order);
    r.residual_double_dt = r2.residual;
    r.time_dominated = r2.residual > 4.0 * r.residual;
  }
  return r;
}

ResidualReport check_evolution(const std::function<Trajectory(int N)>& traj, const std::vector<int>& Ns,
                               EvolutionKind kind, LaplacianOrder order) {
  ResidualReport rep;
  rep.name = "evolution_" + to_string(kind);
  rep.resolutions = Ns;
  ResidualReport sub;
  sub.name = kind == EvolutionKind::Psi ? "contraction_identity" : "ricci_from_det";
  sub.resolutions = Ns;
  double calib = 0.0;
  for (int N : Ns) {
    const EvolutionResult r = evolution_residual(traj(N), kind, order);
    rep.residuals.push_back(r.residual);
    rep.scales.push_back(r.scale);
    rep.tolerance = r.tolerance;
    rep.time_dominated = rep.time_dominated || r.time_dominated;
    sub.residuals.push_back(r.sub_residual);
    sub.tolerance = r.tolerance;
    calib = r.calibration;
  }
  rep.orders = observed_orders(rep.residuals);
  rep.sup_residual = rep.residuals.back();
  if (kind == EvolutionKind::Higher) {
    rep.note = "calibration constant " + std::to_string(calib);
    rep.sup_residual = calib;
    rep.tolerance = 10.0;
  }
  rep.pass = rep.sup_residual <= rep.tolerance;
  if (kind == EvolutionKind::Psi || kind == EvolutionKind::Ric) {
    sub.orders = observed_orders(sub.residuals);
    sub.sup_residual = sub.residuals.back();
    sub.pass = sub.sup_residual <= sub.tolerance;
    rep.sub.push_back(sub);
    rep.pass = rep.pass && sub.pass;
  }
  if (rep.time_dominated) rep.note += (rep.note.empty() ? "" : "; ") + std::string("time differencing dominates");
  return rep;
}

}  // namespace hrf
