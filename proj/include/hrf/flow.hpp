#pragma once

// Explicit time integration of ∂_t g = −S(g).

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "hrf/chern.hpp"

namespace hrf {

class CflError : public Error {
 public:
  CflError(const std::string& what, double dt, double limit) : Error(what), dt_(dt), limit_(limit) {}
  double dt() const { return dt_; }
  double limit() const { return limit_; }

 private:
  double dt_, limit_;
};

enum class BoundarySource { HoldInitial, Exact };

constexpr double kMaxCfl = 0.5;

struct FlowConfig {
  double cfl = 0.1;
  double t_end = 0.1;
  double dt = 0.0;  // > 0: fixed step instead of the CFL rule
  BoundarySource boundary = BoundarySource::HoldInitial;
  std::function<TensorField(double)> exact;  // required for BoundarySource::Exact
  double positivity_floor = 1e-8;
  int cadence = 10;  // steps between diagnostics records
  bool record_pinching = true;
  bool keep_trajectory = true;
  std::uint64_t seed = 1;

  void validate() const;
};

struct FlowState {
  double t = 0.0;
  MetricField g;
  MetricField g0;
};

/// −S(g).
TensorField rhs(const MetricField& g);

/// cfl·h²/λ_max(g⁻¹).
double cfl_dt(const MetricField& g, double cfl);

/// One RK4 step with stage-wise Hermitian projection and frozen-shell feed.
/// Throws CflError if dt exceeds the stability bound (cfl 0.5) and
/// PositivityError if an eigenvalue drops to the floor.
FlowState step(const FlowState& s, double dt, const FlowConfig& cfg);

/// Overwrites the frozen shell of g with the boundary source at time t.
void apply_boundary(TensorField& g, const MetricField& g0, double t, const FlowConfig& cfg);

struct DiagnosticsRecord {
  long step = 0;
  double t = 0.0;
  double dt = 0.0;
  double sup_rm = 0.0;       // sup |Rm|
  double sup_t2 = 0.0;       // sup |T|²
  double sup_grad_rm = 0.0;  // sup |∇Rm| (both ∇ and ∇̄ parts)
  double sup_grad_t = 0.0;
  double ric_min = 0.0;      // global extremes of Ric relative to g
  double ric_max = 0.0;
  double pinching = 0.0;     // NaN when no admissible probe
  double equivalence = 0.0;  // sup max(λ_max(g0⁻¹g), λ_max(g⁻¹g0)) − 1
  double min_eig = 0.0;
};

DiagnosticsRecord diagnose(const FlowState& s, long step, double dt, std::uint64_t seed,
                           bool pinching);
void write_diagnostics_header(std::ostream& os);
void write_diagnostics_row(std::ostream& os, const DiagnosticsRecord& r);

/// Sup over the diagnostics box of max(λ_max(g0⁻¹g), λ_max(g⁻¹g0)) − 1.
double equivalence_defect(const MetricField& g, const MetricField& g0);

enum class HaltReason { Completed, Positivity, Cfl, NonFinite };
std::string to_string(HaltReason h);

struct TrajectoryPoint {
  double t;
  MetricField g;
};

struct RunResult {
  HaltReason halt = HaltReason::Completed;
  std::string message;
  FlowState final;
  long steps = 0;
  std::vector<DiagnosticsRecord> records;
  std::vector<TrajectoryPoint> trajectory;  // at cadence, when kept
};

/// Advances to t_end or the first guard breach. Records diagnostics at
/// t = 0, every `cadence` steps, and at the end.
RunResult run(const FlowState& init, const FlowConfig& cfg,
              const std::function<void(const DiagnosticsRecord&)>& on_record = {});

}  // namespace hrf
