#pragma once

// Residual checks of curvature identities and evolution equations, with
// grid-refinement order measurement.

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "hrf/chern.hpp"
#include "hrf/flow.hpp"
#include "json.hpp"

namespace hrf {

struct ResidualReport {
  std::string name;
  std::vector<int> resolutions;
  std::vector<double> residuals;  // sup residual per resolution
  std::vector<double> orders;     // log2 of successive residual ratios
  std::vector<double> scales;     // size of one side of the identity, per resolution
  double sup_residual = 0.0;      // at the finest resolution
  double tolerance = 0.0;
  bool pass = false;
  bool time_dominated = false;    // evolution checks: halving dt moved the residual > 4×
  std::string note;
  std::vector<ResidualReport> sub;

  double min_order() const;
};

nlohmann::json to_json(const ResidualReport& r);

/// 50·h⁴·(sixth-difference scale of f), floored at 1e-12.
double truncation_tolerance(const TensorField& f);

/// log2 ratios of successive residuals.
std::vector<double> observed_orders(const std::vector<double>& residuals);

// ---- Single-resolution residuals (sup g-norm over the diagnostics box) ----

struct CommutationResiduals {
  double vector = 0, form = 0, vector_bar = 0, form_bar = 0;
};
/// Smooth periodic one-slot test field on (x1, y1[, x2]).
TensorField commutation_test_field(const GridSpec& spec, Slot slot, double phase);
/// Residuals for X^l, a_k, X^{l̄}, a_{k̄}.
CommutationResiduals commutation_residuals(const ChernStack& st, const TensorField& x,
                                           const TensorField& a, const TensorField& xb,
                                           const TensorField& ab);
/// Same with the default test fields.
CommutationResiduals commutation_residuals(const ChernStack& st);

struct BianchiResiduals {
  std::array<double, 6> residual{};  // a, b, c (first form), c (second form), d, e
  std::array<double, 6> side{};      // sup of the curvature-difference side
};
BianchiResiduals torsion_bianchi_residuals(const ChernStack& st);
extern const std::array<const char*, 6> kBianchiNames;

/// −S(g) minus the parabolic-form right side built from g0's connection.
double parabolic_form_residual(const MetricField& g, const MetricField& g0);

/// Sup of the two Ricci formulas' difference.
double ricci_formula_residual(const MetricField& g);

// ---- Refinement studies ----

using MetricGen = std::function<MetricField(int N)>;

ResidualReport check_commutation(const MetricGen& gen, const std::vector<int>& Ns);
ResidualReport check_torsion_bianchi(const MetricGen& gen, const std::vector<int>& Ns);
ResidualReport check_parabolic_form(const MetricGen& gen, const MetricGen& gen0,
                                    const std::vector<int>& Ns);
ResidualReport check_ricci_formulas(const MetricGen& gen, const std::vector<int>& Ns);

// ---- Evolution equations ----

enum class EvolutionKind { Trace, Psi, Rm, Ric, Higher };
std::string to_string(EvolutionKind k);

/// Snapshots at fixed spacing dt; at least 5. With 9 or more, the check also
/// evaluates at doubled spacing and flags time-dominated residuals.
struct Trajectory {
  MetricField g0;
  double dt = 0.0;
  std::vector<MetricField> g;
  double t0 = 0.0;
};

/// Flow from g0 with `count` snapshots `spacing` apart (substeps RK4 steps per
/// spacing).
Trajectory make_trajectory(const MetricField& g0, double spacing, int count, int substeps,
                           const FlowConfig& cfg);

struct EvolutionResult {
  double residual = 0.0;  // sup over the diagnostics box
  double scale = 0.0;     // sup of ∂_t of the quantity
  double calibration = 0.0;  // Higher only: sup|LHS| / Σ sup|schematic terms|
  double sub_residual = 0.0;  // Psi: contraction identity; Ric: −∂∂̄ log det cross-check
  double tolerance = 0.0;     // truncation tolerance of the quantity at the middle snapshot
  double residual_double_dt = std::nan("");  // same check at twice the snapshot spacing
  bool time_dominated = false;
};

EvolutionResult evolution_residual(const Trajectory& tr, EvolutionKind kind,
                                   LaplacianOrder order = LaplacianOrder::Symmetric);

/// Joint (h, dt) refinement: one trajectory per resolution from traj(N).
ResidualReport check_evolution(const std::function<Trajectory(int N)>& traj,
                               const std::vector<int>& Ns, EvolutionKind kind,
                               LaplacianOrder order = LaplacianOrder::Symmetric);

/// Fourth-order centred time derivative at the middle of 5 equally spaced samples.
TensorField time_derivative(const std::vector<TensorField>& q, double dt);

/// Real part of the pointwise g-inner product ⟨a, b⟩.
ScalarField inner_re(const TensorField& a, const TensorField& b, const MetricField& g);

}  // namespace hrf
