#include "hrf/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "hrf/models.hpp"
#include "hrf/tensor.hpp"
#include "hrf/verify.hpp"

namespace hrf {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

ScalarField grad2(const TensorField& q, const TensorField& gamma, const MetricField& g) {
  return norm2(covariant_derivative(q, gamma, Direction::Hol), g) +
         norm2(covariant_derivative(q, gamma, Direction::Antihol), g);
}

ScalarField hess2(const TensorField& q, const TensorField& gamma, const MetricField& g) {
  return grad2(covariant_derivative(q, gamma, Direction::Hol), gamma, g) +
         grad2(covariant_derivative(q, gamma, Direction::Antihol), gamma, g);
}

double sup_sqrt(const ScalarField& f) { return std::sqrt(std::max(0.0, sup_real(f))); }

double median(std::vector<double> v) {
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

void require_points(const TrajectoryView& tr, const char* who) {
  if (tr.empty()) throw Error(std::string(who) + ": empty trajectory");
  for (std::size_t k = 1; k < tr.size(); ++k)
    if (!(tr[k].t > tr[k - 1].t)) throw Error(std::string(who) + ": time stamps must increase");
}

// Bisectional gate shared by the curvature-sign monitors.
double initial_bisectional(const ChernStack& st0, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return bisectional_sup(st0, rng).kappa;
}

}  // namespace

double sup_real_inset(const ScalarField& f, double inset) {
  const GridSpec& spec = f.spec();
  const int lo = std::max(spec.interior_lo(), static_cast<int>(std::ceil(inset * spec.N - 1e-9)));
  const int hi = spec.N - lo;
  double best = -std::numeric_limits<double>::infinity();
  std::size_t lin = 0;
  for_each_index(spec, f.mask(), [&](const Index& idx) {
    bool inside = true;
    for (int d = 0; d < spec.axes(); ++d)
      if (f.active(d) && (idx[d] < lo || idx[d] >= hi)) inside = false;
    if (inside) best = std::max(best, f.at(lin)[0].real());
    ++lin;
  });
  return best;
}

double ricci_truncation_tolerance(const MetricField& g) {
  const GridSpec& spec = g.spec();
  if (spec.N % 2 != 0 || spec.N < 16) return truncation_tolerance(g.tensor());
  GridSpec coarse = spec;
  coarse.N = spec.N / 2;
  const TensorField& fine = g.tensor();
  TensorField sub(coarse, fine.valence(), fine.mask());
  std::size_t lin = 0;
  for_each_index(coarse, fine.mask(), [&](const Index& idx) {
    const Index f{2 * idx[0], 2 * idx[1], 2 * idx[2], 2 * idx[3]};
    std::copy_n(fine.at(fine.offset(f)), fine.comps(), sub.at(lin));
    ++lin;
  });
  const RicciExtremes ef = ricci_extremes(build_stack(g));
  const RicciExtremes ec = ricci_extremes(build_stack(MetricField(sub)));
  const int lo = spec.interior_lo(), hi = spec.interior_hi();
  double diff = 0.0;
  for_each_index(coarse, fine.mask(), [&](const Index& idx) {
    const Index f{2 * idx[0], 2 * idx[1], 2 * idx[2], 2 * idx[3]};
    for (int d = 0; d < spec.axes(); ++d)
      if (fine.active(d) && (f[d] < lo || f[d] >= hi)) return;
    diff = std::max(diff, std::abs(ef.lambda_max.value(f, 0).real() - ec.lambda_max.value(idx, 0).real()));
    diff = std::max(diff, std::abs(ef.lambda_min.value(f, 0).real() - ec.lambda_min.value(idx, 0).real()));
  });
  return std::max(1e-12, diff);
}

double curvature_scale(const ChernStack& st) {
  const ScalarField b = map_points(
      st.spec(), valence::scalar(),
      [](cplx* o, const cplx* r, const cplx* t) { o[0] = std::sqrt(std::max(0.0, r[0].real())) + t[0].real(); },
      norm2(st.rm_lo, st.g), norm2(st.torsion, st.g));
  return sup_real(b);
}

bool recompute_verdict(MonitorSeries& s) {
  const auto& v = s.value;
  const auto& t = s.t;
  if (s.name == "shi_m1" || s.name == "shi_m2") {
    const double t_cut = t.front() + 0.1 * (t.back() - t.front());
    std::vector<double> late;
    for (std::size_t k = 0; k < v.size(); ++k)
      if (t[k] >= t_cut) late.push_back(v[k]);
    s.measured = median(late);
    s.pass = std::all_of(late.begin(), late.end(), [&](double x) { return x <= s.threshold * s.measured; });
  } else if (s.name == "equivalence") {
    s.measured = kNaN;
    for (std::size_t k = 0; k < v.size(); ++k)
      if (v[k] > s.threshold) {
        s.measured = t[k];
        break;
      }
    s.pass = std::isnan(s.measured);
  } else if (s.name == "preserved_ricci") {
    // hypothesis against the bare tolerance, verdict against 10x it
    s.hypothesis_ok = s.parameter <= 0.1 * s.threshold;
    s.pass = s.hypothesis_ok && std::all_of(v.begin(), v.end(), [&](double x) { return x <= s.threshold; });
  } else if (s.name == "pinching") {
    double c2 = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) {
      if (v[k] <= 20.0) continue;
      const double kt = s.parameter * t[k];
      c2 = kt > 0.0 ? std::max(c2, (v[k] - 20.0) / std::sqrt(kt)) : std::numeric_limits<double>::infinity();
    }
    s.measured = c2;
    s.pass = s.hypothesis_ok && c2 <= s.threshold;
  } else if (s.name == "quasi_negative") {
    bool ok = true;
    for (std::size_t k = 0; k < v.size(); ++k)
      if (t[k] >= s.parameter && !(v[k] < s.threshold)) ok = false;
    s.pass = s.hypothesis_ok && ok;
  } else {
    throw Error("monitor: unknown series '" + s.name + "'");
  }
  return s.pass;
}

MonitorSeries shi_monitor(const TrajectoryView& tr, int m) {
  if (m != 1 && m != 2) throw Error("shi_monitor: m must be 1 or 2");
  require_points(tr, "shi_monitor");
  MonitorSeries s;
  s.name = m == 1 ? "shi_m1" : "shi_m2";
  s.threshold = 3.0;
  for (const auto& p : tr) {
    const ChernStack st = build_stack(p.g);
    const auto d = m == 1 ? grad2 : hess2;
    const double sum = sup_sqrt(d(st.rm_lo, st.gamma, st.g)) + sup_sqrt(d(st.torsion, st.gamma, st.g));
    s.t.push_back(p.t);
    s.value.push_back(std::pow(p.t, 0.5 * m) * sum);
  }
  recompute_verdict(s);
  return s;
}

MonitorSeries equivalence_monitor(const TrajectoryView& tr, const MetricField& g0, double eps) {
  require_points(tr, "equivalence_monitor");
  MonitorSeries s;
  s.name = "equivalence";
  s.threshold = eps;
  for (const auto& p : tr) {
    s.t.push_back(p.t);
    s.value.push_back(equivalence_defect(p.g, g0));
  }
  recompute_verdict(s);
  return s;
}

MonitorSeries preserved_ricci_monitor(const TrajectoryView& tr, std::uint64_t seed) {
  require_points(tr, "preserved_ricci_monitor");
  MonitorSeries s;
  s.name = "preserved_ricci";
  const ChernStack st0 = build_stack(tr.front().g);
  s.threshold = 10.0 * ricci_truncation_tolerance(tr.front().g);
  s.parameter = initial_bisectional(st0, seed);
  for (const auto& p : tr) {
    s.t.push_back(p.t);
    s.value.push_back(ricci_extremes(build_stack(p.g)).global_max);
  }
  recompute_verdict(s);
  if (!s.hypothesis_ok) s.note = "hypothesis failed: initial bisectional sup above tolerance";
  return s;
}

MonitorSeries pinching_monitor(const TrajectoryView& tr, const PinchingOptions& opt, double cap,
                               std::uint64_t seed) {
  require_points(tr, "pinching_monitor");
  MonitorSeries s;
  s.name = "pinching";
  s.threshold = cap;
  const ChernStack st0 = build_stack(tr.front().g);
  s.parameter = curvature_scale(st0);
  s.hypothesis_ok = initial_bisectional(st0, seed) <= ricci_truncation_tolerance(tr.front().g);
  std::mt19937_64 rng(seed);
  for (const auto& p : tr) {
    s.t.push_back(p.t);
    s.value.push_back(pinching_ratio(build_stack(p.g), rng, opt).ratio);
  }
  recompute_verdict(s);
  if (!s.hypothesis_ok) s.note = "hypothesis failed: initial bisectional sup above tolerance";
  return s;
}

MonitorSeries quasi_negative_monitor(const TrajectoryView& tr, double margin, double t1, std::uint64_t seed) {
  require_points(tr, "quasi_negative_monitor");
  const ChernStack st0 = build_stack(tr.front().g);
  const double tol = ricci_truncation_tolerance(tr.front().g);
  const RicciExtremes e0 = ricci_extremes(st0);
  std::ostringstream why;
  if (e0.global_max > tol) why << "initial Ric has a positive eigenvalue " << e0.global_max << "; ";
  // negative at a point means negative definite there: κ(z) = λ_max(z) < 0
  const double best = inf_real(e0.lambda_max);
  if (!(best < -tol)) why << "initial Ric is nowhere negative definite (smallest λ_max " << best << "); ";
  const double bk = initial_bisectional(st0, seed);
  if (bk > tol) why << "initial bisectional sup " << bk << " above tolerance " << tol << "; ";
  if (!why.str().empty())
    throw HypothesisError("quasi_negative_monitor: hypothesis not met: " + why.str().substr(0, why.str().size() - 2));
  MonitorSeries s;
  s.name = "quasi_negative";
  s.threshold = 0.0;
  s.note = "gate tolerance " + std::to_string(tol) + ", initial Ric eigenvalues in [" +
           std::to_string(e0.global_min) + ", " + std::to_string(e0.global_max) + "]";
  s.parameter = t1 > 0.0 ? t1 : 0.01 / curvature_scale(st0);
  for (const auto& p : tr) {
    s.t.push_back(p.t);
    s.value.push_back(sup_real_inset(ricci_extremes(build_stack(p.g)).lambda_max, margin));
  }
  recompute_verdict(s);
  return s;
}

void write_monitor_csv(std::ostream& os, const std::vector<MonitorSeries>& series) {
  os << "monitor,t,value,threshold,parameter,measured,hypothesis_ok,pass\n";
  os.precision(17);
  for (const auto& s : series)
    for (std::size_t k = 0; k < s.t.size(); ++k)
      os << s.name << ',' << s.t[k] << ',' << s.value[k] << ',' << s.threshold << ',' << s.parameter << ','
         << s.measured << ',' << (s.hypothesis_ok ? 1 : 0) << ',' << (s.pass ? 1 : 0) << '\n';
}

std::vector<MonitorSeries> read_monitor_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("monitor,t,value", 0) != 0)
    throw Error("monitor csv: missing header");
  std::vector<MonitorSeries> out;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 8) throw Error("monitor csv: line " + std::to_string(lineno) + ": expected 8 fields");
    if (out.empty() || out.back().name != f[0]) {
      out.emplace_back();
      out.back().name = f[0];
      out.back().threshold = std::stod(f[3]);
      out.back().parameter = std::stod(f[4]);
      out.back().hypothesis_ok = f[6] == "1";
    }
    out.back().t.push_back(std::stod(f[1]));
    out.back().value.push_back(std::stod(f[2]));
  }
  return out;
}

}  // namespace hrf

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace hrf {

// ---- Exhaustion profile ----

ExhaustionProfile::ExhaustionProfile(double kappa, int panels) : kappa_(kappa), panels_(panels) {
  if (!(kappa > 0.0 && kappa < 0.125))
    throw Error("exhaustion: kappa must lie in (0, 1/8), got " + std::to_string(kappa));
  if (panels < 1) throw Error("exhaustion: panels must be positive");
  a_ = 1.0 - kappa + kappa * kappa;
  b_ = a_ + kappa * kappa;
  Fb_ = integrate(b_);
}

double ExhaustionProfile::f(double s, int k) const {
  if (s <= 1.0 - kappa_) return 0.0;
  if (s >= 1.0) return std::numeric_limits<double>::infinity();
  const double u = (s - 1.0 + kappa_) / kappa_, w = 1.0 - u * u, q = kappa_;
  switch (k) {
    case 0: return -std::log(w);
    case 1: return 2.0 * u / (q * w);
    case 2: return 2.0 * (1.0 + u * u) / (q * q * w * w);
    case 3: return 4.0 * u * (3.0 + u * u) / (q * q * q * w * w * w);
  }
  throw Error("exhaustion: derivative order out of range");
}

double ExhaustionProfile::phi(double s, int k) const {
  if (s <= a_) return 0.0;
  if (s >= b_) return k == 0 ? 1.0 : 0.0;
  // quintic smoothstep: C², φ′ ≤ 15/8 κ⁻²
  const double w = kappa_ * kappa_, v = (s - a_) / w;
  switch (k) {
    case 0: return v * v * v * (10.0 - 15.0 * v + 6.0 * v * v);
    case 1: return 30.0 * v * v * (1.0 - v) * (1.0 - v) / w;
    case 2: return 60.0 * v * (1.0 - v) * (1.0 - 2.0 * v) / (w * w);
    case 3: return 60.0 * (1.0 - 6.0 * v + 6.0 * v * v) / (w * w * w);
  }
  throw Error("exhaustion: derivative order out of range");
}

double ExhaustionProfile::integrate(double s) const {
  if (s <= a_) return 0.0;
  const double hi = std::min(s, b_);
  const double step = (hi - a_) / panels_;
  auto integrand = [this](double x) { return phi(x) * f(x, 1); };
  double sum = 0.0;
  for (int k = 0; k < panels_; ++k)
    sum += boost::math::quadrature::gauss_kronrod<double, 15>::integrate(integrand, a_ + k * step,
                                                                          a_ + (k + 1) * step, 10, 1e-15);
  return sum;
}

double ExhaustionProfile::F(double s, int k) const {
  if (s >= 1.0) return std::numeric_limits<double>::infinity();
  switch (k) {
    case 0:
      if (s <= b_) return integrate(s);
      return Fb_ + f(s) - f(b_);
    case 1: return phi(s) * f(s, 1);
    case 2: return phi(s, 1) * f(s, 1) + phi(s) * f(s, 2);
    case 3: return phi(s, 2) * f(s, 1) + 2.0 * phi(s, 1) * f(s, 2) + phi(s) * f(s, 3);
  }
  throw Error("exhaustion: derivative order out of range");
}

ExhaustionSampling sample_profile(const ExhaustionProfile& p, int samples) {
  ExhaustionSampling out;
  const double kappa = p.kappa();
  const ExhaustionProfile fine(kappa, 2 * p.panels());
  std::vector<double> ss;
  for (int k = 0; k < samples / 2; ++k) ss.push_back(static_cast<double>(k) / (samples / 2));
  // towards 1: 1 − s from 2κ down to 1e-12
  const double lo = std::log10(2.0 * kappa), hi = -12.0;
  for (int k = 0; k < samples - samples / 2; ++k)
    ss.push_back(1.0 - std::pow(10.0, lo + (hi - lo) * k / (samples - samples / 2 - 1)));
  std::sort(ss.begin(), ss.end());
  out.samples = static_cast<int>(ss.size());
  out.min_dF = std::numeric_limits<double>::infinity();
  out.c3 = std::numeric_limits<double>::infinity();
  for (double s : ss) {
    const double F = p.F(s);
    if (s <= p.a()) {
      out.min_F_on_flat = std::min(out.min_F_on_flat, F);
      out.max_F_on_flat = std::max(out.max_F_on_flat, F);
    }
    out.min_dF = std::min(out.min_dF, p.F(s, 1));
    for (int k = 1; k <= 3; ++k)
      out.sup_weighted[k - 1] = std::max(out.sup_weighted[k - 1], std::exp(-k * F) * std::abs(p.F(s, k)));
    if (s >= p.a() && s <= p.b() + kappa)
      out.quadrature_change = std::max(out.quadrature_change, std::abs(F - fine.F(s)));
    if (s > 1.0 - 2.0 * kappa) {
      const double tau = 0.5 * kappa * (1.0 - s);
      out.c2 = std::max(out.c2, (std::exp(p.F(s + tau) - p.F(s - tau)) - 1.0) / kappa);
      out.c3 = std::min(out.c3, tau * std::exp(p.F(s - tau)) / (kappa * kappa));
    }
  }
  return out;
}

ScalarField radial_exhaustion(const GridSpec& spec, double beta) {
  return models::sample(spec, valence::scalar(), spec.full_mask(), [&](const models::Coords& x, cplx* o) {
    double r2 = 0.0;
    for (int d = 0; d < spec.axes(); ++d) r2 += (x[d] - 0.5) * (x[d] - 0.5);
    o[0] = 1.0 + beta * r2;
  });
}

namespace {

// e^{−2F}(|R₀ − 2∂∂̄F⊗δ|_{g₀} + |T₀ + 2(∂F⊗δ − δ⊗∂F)|²_{g₀}) at one point.
struct ConformalKernel {
  const ChernStack& base;
  int n;
  TensorField t0, r0, g, ginv;  // broadcast to the full mask

  explicit ConformalKernel(const ChernStack& b) : base(b), n(b.n()) {
    const std::uint8_t m = b.spec().full_mask();
    t0 = b.torsion.broadcast_to(m);
    r0 = b.rm.broadcast_to(m);
    g = b.g.tensor().broadcast_to(m);
    ginv = b.g.inverse().broadcast_to(m);
  }

  double operator()(std::size_t pt, double F, const cplx* dF, const cplx* ddbF) const {
    const cplx* gp = g.at(pt);
    const cplx* hp = ginv.at(pt);
    const cplx* tp = t0.at(pt);
    const cplx* rp = r0.at(pt);
    // T^k_{ij}: (Up, Lo, Lo), component k·n²+i·n+j
    cplx t[8], r[16];
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const int c = (k * n + i) * n + j;
          t[c] = tp[c] + 2.0 * ((j == k ? dF[i] : 0.0) - (i == k ? dF[j] : 0.0));
        }
    // R_{ij̄k}^l: (Lo, LoBar, Lo, Up)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l) {
            const int c = ((i * n + j) * n + k) * n + l;
            r[c] = rp[c] - (k == l ? 2.0 * ddbF[i * n + j] : 0.0);
          }
    // |T|²: g_{ab̄} g^{ic̄} g^{jd̄} T^a_{ij} conj(T^b_{cd})
    double nt = 0.0;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int i = 0; i < n; ++i)
          for (int c = 0; c < n; ++c)
            for (int j = 0; j < n; ++j)
              for (int d = 0; d < n; ++d)
                nt += (gp[a * n + b] * hp[i * n + c] * hp[j * n + d] * t[(a * n + i) * n + j] *
                       std::conj(t[(b * n + c) * n + d])).real();
    // |R|²: g^{ip̄} g_{qj̄}... with slots (Lo, LoBar, Lo, Up)
    double nr = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l)
            for (int p = 0; p < n; ++p)
              for (int q = 0; q < n; ++q)
                for (int s = 0; s < n; ++s)
                  for (int u = 0; u < n; ++u)
                    // g^{ip̄} g^{q j̄}(barred slot pairs as conj) g^{k s̄} g_{l ū}
                    nr += (hp[i * n + p] * std::conj(hp[j * n + q]) * hp[k * n + s] * gp[l * n + u] *
                           r[((i * n + j) * n + k) * n + l] * std::conj(r[((p * n + q) * n + s) * n + u]))
                              .real();
    return std::exp(-2.0 * F) * (std::sqrt(std::max(0.0, nr)) + nt);
  }
};

}  // namespace

ConformalCurvature conformal_curvature(const ScalarField& F, const ChernStack& base) {
  const GridSpec& spec = base.spec();
  const std::uint8_t m = spec.full_mask();
  const TensorField Ff = F.broadcast_to(m);
  const TensorField dF = gradient(F, true).broadcast_to(m);
  const TensorField ddbF = gradient(gradient(F, false), true).broadcast_to(m);
  const ConformalKernel kern(base);
  ConformalCurvature out;
  out.bound = TensorField(spec, valence::scalar(), m);
  for (std::size_t p = 0; p < out.bound.points(); ++p) {
    out.bound.at(p)[0] = kern(p, Ff.at(p)[0].real(), dF.at(p), ddbF.at(p));
    ++out.points_in_u;
  }
  out.sup = sup_real(out.bound);
  return out;
}

MetricField conformal_metric(const ScalarField& F, const MetricField& g0) {
  return MetricField(map_points(
      g0.spec(), valence::metric(),
      [n = g0.n()](cplx* o, const cplx* f, const cplx* g) {
        const double e = std::exp(2.0 * f[0].real());
        for (int c = 0; c < n * n; ++c) o[c] = e * g[c];
      },
      F, g0.tensor()));
}

namespace {

// Largest ρ₀ with {ρ < ρ₀} inside the diagnostics box.
double rho_limit(const ScalarField& rho) {
  const GridSpec& spec = rho.spec();
  const int lo = spec.interior_lo(), hi = spec.interior_hi();
  double best = std::numeric_limits<double>::infinity();
  std::size_t lin = 0;
  for_each_index(spec, rho.mask(), [&](const Index& idx) {
    bool edge = false;
    for (int d = 0; d < spec.axes(); ++d)
      if (rho.active(d) && (idx[d] <= lo || idx[d] >= hi - 1)) edge = true;
    if (edge) best = std::min(best, rho.at(lin)[0].real());
    ++lin;
  });
  return best;
}

}  // namespace

ConformalCurvature conformal_curvature(const ExhaustionProfile& p, double rho0, const ScalarField& rho,
                                       const ChernStack& base) {
  const GridSpec& spec = base.spec();
  if (!(rho.spec() == spec)) throw Error("exhaustion: ρ and base metric live on different grids");
  const double rmin = inf_real(rho);
  if (!(rmin >= 1.0 - 1e-12)) throw Error("exhaustion: ρ must be ≥ 1, min is " + std::to_string(rmin));
  const double lim = rho_limit(rho);
  if (!(rho0 <= lim))
    throw Error("exhaustion: U_ρ₀ leaves the diagnostics box for ρ₀ = " + std::to_string(rho0) +
                " (limit " + std::to_string(lim) + ")");
  const std::uint8_t m = spec.full_mask();
  const TensorField r = rho.broadcast_to(m);
  const TensorField dr = gradient(rho, true).broadcast_to(m);
  const TensorField dbr = gradient(rho, false).broadcast_to(m);
  const TensorField ddbr = gradient(gradient(rho, false), true).broadcast_to(m);
  const ConformalKernel kern(base);
  const int n = spec.n;
  ConformalCurvature out;
  out.bound = TensorField(spec, valence::scalar(), m);
  for (std::size_t pt = 0; pt < out.bound.points(); ++pt) {
    const double s = r.at(pt)[0].real() / rho0;
    if (!(s < 1.0)) {
      out.bound.at(pt)[0] = 0.0;
      continue;
    }
    ++out.points_in_u;
    const double F = p.F(s), F1 = p.F(s, 1) / rho0, F2 = p.F(s, 2) / (rho0 * rho0);
    cplx dF[2], ddbF[4];
    for (int i = 0; i < n; ++i) {
      dF[i] = F1 * dr.at(pt)[i];
      for (int j = 0; j < n; ++j)
        ddbF[i * n + j] = F2 * dr.at(pt)[i] * dbr.at(pt)[j] + F1 * ddbr.at(pt)[i * n + j];
    }
    out.bound.at(pt)[0] = kern(pt, F, dF, ddbF);
  }
  out.sup = sup_real(out.bound);
  return out;
}

double base_constant(const ChernStack& base, const ScalarField& rho) {
  const ScalarField b = map_points(
      base.spec(), valence::scalar(),
      [](cplx* o, const cplx* d, const cplx* h) { o[0] = d[0].real() + std::sqrt(std::max(0.0, h[0].real())); },
      norm2(gradient(rho, true), base.g), norm2(gradient(gradient(rho, false), true), base.g));
  return std::max(curvature_scale(base), sup_real(b));
}

ExhaustionCheck exhaustion_curvature_check(const ExhaustionProfile& p, double rho0, const ScalarField& rho,
                                           const ChernStack& base, int bisection_steps) {
  ExhaustionCheck c;
  c.kappa = p.kappa();
  c.rho0 = rho0;
  c.k0 = base_constant(base, rho);
  c.rho_max = rho_limit(rho);
  c.sampling = sample_profile(p);
  auto passes = [&](double r0) { return conformal_curvature(p, r0, rho, base).sup <= 2.0 * c.k0; };
  c.sup_bound = conformal_curvature(p, rho0, rho, base).sup;
  c.pass = c.sup_bound <= 2.0 * c.k0;
  // Coarse scan from the top for the passing tail, then bisect its lower edge.
  const double rmin = inf_real(rho);
  const int scan = 16;
  double good = kNaN, bad = rmin;
  for (int k = scan; k >= 1; --k) {
    const double r0 = rmin + (c.rho_max - rmin) * k / scan;
    if (passes(r0)) {
      good = r0;
    } else {
      bad = r0;
      break;
    }
  }
  if (!std::isnan(good)) {
    for (int it = 0; it < bisection_steps && good - bad > 1e-6 * good; ++it) {
      const double mid = 0.5 * (good + bad);
      (passes(mid) ? good : bad) = mid;
    }
  }
  c.threshold = good;
  return c;
}

nlohmann::json to_json(const ExhaustionCheck& c) {
  nlohmann::json j;
  j["kappa"] = c.kappa;
  j["rho0"] = c.rho0;
  j["K0"] = c.k0;
  j["sup_bound"] = c.sup_bound;
  j["bound_2K0"] = 2.0 * c.k0;
  j["pass"] = c.pass;
  j["rho0_threshold"] = std::isnan(c.threshold) ? nlohmann::json(nullptr) : nlohmann::json(c.threshold);
  j["rho0_max"] = c.rho_max;
  const auto& s = c.sampling;
  j["F_zero_on_flat_part"] = s.min_F_on_flat == 0.0 && s.max_F_on_flat == 0.0;
  j["min_dF"] = s.min_dF;
  j["sup_weighted_derivatives"] = s.sup_weighted;
  j["quadrature_change"] = s.quadrature_change;
  j["profile_c2"] = s.c2;
  j["profile_c3"] = s.c3;
  j["samples"] = s.samples;
  return j;
}

}  // namespace hrf
