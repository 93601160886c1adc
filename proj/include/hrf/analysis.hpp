#pragma once

// Monitors for a-priori estimates and preserved curvature conditions along a
// flow trajectory, and the conformal exhaustion construction.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "hrf/chern.hpp"
#include "hrf/flow.hpp"
#include "json.hpp"

namespace hrf {

class HypothesisError : public Error {
 public:
  using Error::Error;
};

/// Monitor output. The verdict is recomputable from (t, value, threshold,
/// parameter) alone; see recompute_verdict.
struct MonitorSeries {
  std::string name;
  std::vector<double> t, value;
  double threshold = std::numeric_limits<double>::quiet_NaN();
  double parameter = std::numeric_limits<double>::quiet_NaN();  // K, t₁, ... per monitor
  double measured = std::numeric_limits<double>::quiet_NaN();   // c₂, first exceed time, ...
  bool hypothesis_ok = true;
  bool pass = false;
  std::string note;
};

/// Re-derives pass (and measured) from the series fields.
bool recompute_verdict(MonitorSeries& s);

void write_monitor_csv(std::ostream& os, const std::vector<MonitorSeries>& series);
std::vector<MonitorSeries> read_monitor_csv(std::istream& is);

using TrajectoryView = std::vector<TrajectoryPoint>;

/// sup over a sub-box with the given physical inset per side (at least the
/// grid's own diagnostics box).
double sup_real_inset(const ScalarField& f, double inset);

/// sup(|Rm| + |T|²) over the diagnostics box.
/// Truncation tolerance for Ric eigenvalue signs: the largest change of
/// λ_min or λ_max over the diagnostics box when g is resampled on every other
/// grid point (a-posteriori; about 15x the error for a 4th-order scheme). Odd
/// N or N < 16 fall back to truncation_tolerance(g).
double ricci_truncation_tolerance(const MetricField& g);
double curvature_scale(const ChernStack& st);

/// t^{m/2}(sup|∇ᵐRm| + sup|∇ᵐT|), ∇ᵐ over all hol/antihol orderings. m ∈ {1, 2}.
MonitorSeries shi_monitor(const TrajectoryView& tr, int m);

/// sup max(λ_max(g₀⁻¹g), λ_max(g⁻¹g₀)) − 1; measured = first t above eps.
MonitorSeries equivalence_monitor(const TrajectoryView& tr, const MetricField& g0, double eps = 0.1);

/// Global λ_max of Ric relative to g. Threshold 10·ricci_truncation_tolerance
/// of g₀; hypothesis: initial bisectional sup ≤ ricci_truncation_tolerance(g₀).
MonitorSeries preserved_ricci_monitor(const TrajectoryView& tr, std::uint64_t seed = 1);

/// Sup pinching ratio; measured = smallest c₂ with ratio ≤ 20 + c₂√(Kt),
/// K = sup(|Rm| + |T|²) at t = 0. Throws ProbeError with no admissible triple.
MonitorSeries pinching_monitor(const TrajectoryView& tr, const PinchingOptions& opt = {},
                               double cap = 100.0, std::uint64_t seed = 1);

/// Interior λ_max of Ric (inset `margin`); PASS iff < 0 for all t ≥ t₁
/// (t₁ ≤ 0 selects 0.01/K). Throws HypothesisError unless the initial metric
/// is quasi-negative (λ_max ≤ tol everywhere, < −tol somewhere) with
/// bisectional sup ≤ tol, tol = ricci_truncation_tolerance(g₀).
MonitorSeries quasi_negative_monitor(const TrajectoryView& tr, double margin = 0.25, double t1 = 0.0,
                                     std::uint64_t seed = 1);

// ---- Exhaustion ----

class ExhaustionProfile {
 public:
  /// Throws Error unless 0 < κ < 1/8.
  explicit ExhaustionProfile(double kappa, int panels = 8);

  double kappa() const { return kappa_; }
  int panels() const { return panels_; }
  /// φ = 0 up to a, 1 from b.
  double a() const { return a_; }
  double b() const { return b_; }

  /// k-th derivative, k ∈ {0..3}.
  double f(double s, int k = 0) const;
  double phi(double s, int k = 0) const;
  /// 𝔉 and its derivatives, k ∈ {0..3}.
  double F(double s, int k = 0) const;

 private:
  double kappa_, a_, b_;
  int panels_;
  double Fb_;  // 𝔉(b)
  double integrate(double s) const;
};

struct ExhaustionSampling {
  double min_F_on_flat = 0.0, max_F_on_flat = 0.0;  // over [0, a]
  double min_dF = 0.0;                               // 𝔉′ over the sample
  std::array<double, 3> sup_weighted{};              // sup e^{−k𝔉}𝔉^{(k)}, k = 1..3
  double quadrature_change = 0.0;                    // sup |𝔉_panels − 𝔉_2·panels|
  // profile property (iii): τ = κ(1 − s)/2 over s ∈ (1 − 2κ, 1)
  double c2 = 0.0, c3 = 0.0;
  int samples = 0;
};

/// Dense sampling of [0, 1) clustered towards 1.
ExhaustionSampling sample_profile(const ExhaustionProfile& p, int samples = 20000);

/// ρ = 1 + β|w − c|² on the grid's axes, centre at the box centre.
ScalarField radial_exhaustion(const GridSpec& spec, double beta);

struct ConformalCurvature {
  ScalarField bound;  // |Rm(h)|_h + |T(h)|²_h, zero outside U_{ρ₀}
  double sup = 0.0;   // over the diagnostics box ∩ U_{ρ₀}
  long points_in_u = 0;
};

/// h = e^{2F}g₀, F = 𝔉(ρ/ρ₀), via Γ_h = Γ₀ + 2∂F⊗δ and R_h = R₀ − 2∂∂̄F⊗δ.
/// Throws unless ρ ≥ 1 and U_{ρ₀} stays inside the diagnostics box.
ConformalCurvature conformal_curvature(const ExhaustionProfile& p, double rho0, const ScalarField& rho,
                                       const ChernStack& base);

/// Same quantity for a smooth conformal factor field F, derivatives by the
/// grid stencils (no U_{ρ₀} mask).
ConformalCurvature conformal_curvature(const ScalarField& F, const ChernStack& base);

/// e^{2F}g₀.
MetricField conformal_metric(const ScalarField& F, const MetricField& g0);

/// max(sup(|Rm|+|T|²) of g₀, sup(|∂ρ|² + |∂∂̄ρ|)).
double base_constant(const ChernStack& base, const ScalarField& rho);

struct ExhaustionCheck {
  double kappa = 0.0, rho0 = 0.0, k0 = 0.0;
  double sup_bound = 0.0;  // at rho0
  bool pass = false;       // sup_bound ≤ 2K₀
  double threshold = std::numeric_limits<double>::quiet_NaN();  // smallest passing ρ₀ (bisection)
  double rho_max = 0.0;    // largest ρ₀ with U inside the box
  ExhaustionSampling sampling;
};

ExhaustionCheck exhaustion_curvature_check(const ExhaustionProfile& p, double rho0, const ScalarField& rho,
                                           const ChernStack& base, int bisection_steps = 40);

nlohmann::json to_json(const ExhaustionCheck& c);

}  // namespace hrf
