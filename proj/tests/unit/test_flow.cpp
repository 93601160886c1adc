#include <cmath>

#include "doctest.h"
#include "hrf/analysis.hpp"
#include "hrf/flow.hpp"
#include "hrf/models.hpp"

using namespace hrf;

TEST_CASE("flat metric is a fixed point of the stepper") {
  const models::Model m = models::flat(GridSpec::periodic(2, 16));
  FlowConfig cfg;
  FlowState s{0.0, m.g0, m.g0};
  const double dt = cfl_dt(m.g0, 0.1);
  for (int i = 0; i < 5; ++i) s = step(s, dt, cfg);
  CHECK(sup_abs(s.g.tensor() - m.g0.tensor()) == 0.0);
  CHECK(s.t == doctest::Approx(5 * dt));
}

TEST_CASE("rhs equals -Ric for Kähler input and differs for non-Kähler input") {
  const GridSpec spec = GridSpec::periodic(2, 32);
  const models::Model k = models::kahler_potential(spec);
  const double tol_k = sup_abs(rhs(k.g0) + first_ricci_from_det(k.g0));
  CHECK(tol_k <= 1e-3);
  const models::Model nk = models::nonkahler_perturbed(spec);
  const double diff = sup_abs(rhs(nk.g0) + first_ricci_from_det(nk.g0));
  CHECK(diff >= 10.0 * tol_k);
}

TEST_CASE("one step on the Poincaré disc follows the linear scaling solution") {
  const GridSpec spec = GridSpec::frozen(1, 32).with_inset(0.2);
  const models::Model m = models::poincare(spec);
  FlowConfig cfg;
  cfg.boundary = BoundarySource::Exact;
  cfg.exact = m.exact;
  const double dt = cfl_dt(m.g0, 0.1);
  const FlowState s = step({0.0, m.g0, m.g0}, dt, cfg);
  const TensorField want = m.exact(dt);
  CHECK(sup_abs(s.g.tensor() - want) <= 1e-7);
  // growth rate of g11/g0_11 is λ
  const double rate = (sup_abs(s.g.tensor()) / sup_abs(m.g0.tensor()) - 1.0) / dt;
  CHECK(rate == doctest::Approx(2.0).epsilon(1e-2));
}

TEST_CASE("parabolic rescaling with L = 4 is exact for the semi-discrete scheme") {
  const GridSpec spec = GridSpec::periodic(2, 16);
  const models::Model m = models::nonkahler_perturbed(spec);
  const double L = 4.0;
  TensorField scaled = m.g0.tensor();
  scaled *= 1.0 / L;
  const MetricField g0s(scaled);
  FlowConfig base;
  base.t_end = 0.004;
  base.cadence = 1000;
  base.record_pinching = false;
  FlowConfig resc = base;
  resc.t_end = base.t_end / L;
  const RunResult a = run({0.0, m.g0, m.g0}, base);
  const RunResult b = run({0.0, g0s, g0s}, resc);
  CHECK(a.steps == b.steps);
  TensorField ga = a.final.g.tensor();
  ga *= 1.0 / L;
  const double rel = sup_abs(ga - b.final.g.tensor()) / sup_abs(ga);
  CHECK(rel <= 1e-8);
}

TEST_CASE("stepper guards") {
  const models::Model m = models::nonkahler_perturbed(GridSpec::periodic(2, 16));
  FlowConfig cfg;
  SUBCASE("dt above the stability bound is rejected") {
    const double dt = 2.0 * cfl_dt(m.g0, kMaxCfl);
    CHECK_THROWS_AS(step({0.0, m.g0, m.g0}, dt, cfg), CflError);
  }
  SUBCASE("fixed dt above the bound halts the run with a typed reason") {
    cfg.dt = 2.0 * cfl_dt(m.g0, kMaxCfl);
    cfg.t_end = 1.0;
    cfg.record_pinching = false;
    const RunResult r = run({0.0, m.g0, m.g0}, cfg);
    CHECK(r.halt == HaltReason::Cfl);
    CHECK(r.steps == 0);
  }
  SUBCASE("bad cfl coefficient") {
    cfg.cfl = 0.7;
    CHECK_THROWS_AS(cfg.validate(), Error);
  }
  SUBCASE("positivity floor breach halts the run") {
    cfg.positivity_floor = 10.0;
    cfg.t_end = 1.0;
    cfg.record_pinching = false;
    const RunResult r = run({0.0, m.g0, m.g0}, cfg);
    CHECK(r.halt == HaltReason::Positivity);
    CHECK(r.message.find("min eigenvalue") != std::string::npos);
  }
}

TEST_CASE("flat run records all-zero diagnostics") {
  const models::Model m = models::flat(GridSpec::periodic(2, 16));
  FlowConfig cfg;
  cfg.t_end = 0.01;
  cfg.cadence = 50;
  const RunResult r = run({0.0, m.g0, m.g0}, cfg);
  CHECK(r.halt == HaltReason::Completed);
  for (const auto& rec : r.records) {
    CHECK(rec.sup_rm == 0.0);
    CHECK(rec.sup_t2 == 0.0);
    CHECK(rec.sup_grad_rm == 0.0);
    CHECK(rec.ric_max == 0.0);
    CHECK(rec.equivalence == 0.0);
    CHECK(std::isnan(rec.pinching));
  }
}

TEST_CASE("equivalence defect on the Poincaré disc is 2t") {
  const GridSpec spec = GridSpec::frozen(1, 32);
  const models::Model m = models::poincare(spec);
  const MetricField g(m.exact(0.05));
  CHECK(equivalence_defect(g, m.g0) == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("Kähler persistence: sup|T| stays within 2x its discretization-level start") {
  const GridSpec spec = GridSpec::periodic(2, 16);
  // single-harmonic potential: the stencils commute and T(0) is roundoff
  CHECK(sup_norm(build_stack(models::kahler_potential(spec, 0.2).g0).torsion,
                 models::kahler_potential(spec, 0.2).g0) <= 1e-12);

  const models::Model m = models::kahler_potential(spec, 0.2, models::Potential::Mixed);
  FlowConfig cfg;
  cfg.t_end = 0.05 / curvature_scale(build_stack(m.g0));
  cfg.cadence = 1;
  cfg.record_pinching = false;
  cfg.keep_trajectory = false;
  const RunResult r = run({0.0, m.g0, m.g0}, cfg);
  REQUIRE(r.halt == HaltReason::Completed);
  const double t0 = r.records.front().sup_t2;
  CHECK(t0 > 1e-12);
  for (const auto& rec : r.records) CHECK(rec.sup_t2 <= 4.0 * t0);  // |T|² vs (2|T₀|)²
}
