#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "hrf/chern.hpp"
#include "hrf/models.hpp"
#include "hrf/tensor.hpp"

using namespace hrf;
constexpr double kPi = std::numbers::pi;

namespace {

double max_abs_diff(const TensorField& a, const TensorField& b) {
  return sup_abs(a - b);
}

// n = 1, g = e^u with u = 0.1 sin(2πx) sin(2πy)
MetricField exp_metric(int N) {
  const GridSpec spec = GridSpec::periodic(1, N);
  return MetricField(models::sample(spec, valence::metric(), 0b11, [](const models::Coords& x, cplx* o) {
    o[0] = std::exp(0.1 * std::sin(2 * kPi * x[0]) * std::sin(2 * kPi * x[1]));
  }));
}

struct ExpErrors {
  double gamma, ric, ric_det;
};

ExpErrors exp_metric_errors(int N) {
  const MetricField g = exp_metric(N);
  const ChernStack st = build_stack(g);
  const GridSpec& spec = g.spec();
  // Γ = ∂_z u = ½(u_x − i u_y); Ric = −∂∂̄u = 2π² u
  const TensorField gam = models::sample(spec, {Slot::Up, Slot::Lo, Slot::Lo}, 0b11,
                                         [](const models::Coords& x, cplx* o) {
                                           const double sx = std::sin(2 * kPi * x[0]), cx = std::cos(2 * kPi * x[0]);
                                           const double sy = std::sin(2 * kPi * x[1]), cy = std::cos(2 * kPi * x[1]);
                                           const double ux = 0.2 * kPi * cx * sy, uy = 0.2 * kPi * sx * cy;
                                           o[0] = 0.5 * cplx(ux, -uy);
                                         });
  const TensorField ric = models::sample(spec, valence::metric(), 0b11, [](const models::Coords& x, cplx* o) {
    o[0] = 2 * kPi * kPi * 0.1 * std::sin(2 * kPi * x[0]) * std::sin(2 * kPi * x[1]);
  });
  return {max_abs_diff(st.gamma, gam), max_abs_diff(st.ric, ric),
          max_abs_diff(first_ricci_from_det(g), ric)};
}

}  // namespace

TEST_CASE("flat metric has an identically zero stack") {
  const GridSpec spec = GridSpec::periodic(2, 16);
  const ChernStack st = build_stack(models::flat(spec).g0);
  for (const TensorField* f : {&st.gamma, &st.torsion, &st.rm, &st.rm_lo, &st.ric, &st.s})
    for (cplx v : f->data()) CHECK(v == cplx(0.0));
}

TEST_CASE("constant non-diagonal metric has zero connection and curvature") {
  const GridSpec spec = GridSpec::periodic(2, 16);
  const MetricField g(TensorField::constant(spec, valence::metric(),
                                            {2, cplx(0.3, 0.4), cplx(0.3, -0.4), 3}));
  const ChernStack st = build_stack(g);
  CHECK(sup_abs(st.gamma) == 0.0);
  CHECK(sup_abs(st.rm_lo) == 0.0);
  CHECK(sup_abs(st.s) == 0.0);
}

TEST_CASE("n=1 conformal metric matches closed-form connection and Ricci") {
  const ExpErrors e16 = exp_metric_errors(16), e32 = exp_metric_errors(32);
  CHECK(e32.gamma <= 1e-4);
  CHECK(e32.ric <= 1e-3);
  CHECK(std::log2(e16.gamma / e32.gamma) >= 3.5);
  CHECK(std::log2(e16.ric / e32.ric) >= 3.5);
  CHECK(std::log2(e16.ric_det / e32.ric_det) >= 3.5);
}

TEST_CASE("torsion vanishes identically in dimension one") {
  const ChernStack st = build_stack(exp_metric(16));
  CHECK(sup_abs(st.torsion) == 0.0);
}

TEST_CASE("curvature conjugation symmetry holds to roundoff") {
  const ChernStack st = build_stack(models::nonkahler_perturbed(GridSpec::periodic(2, 16)).g0);
  const int n = 2;
  double worst = 0.0;
  for (std::size_t p = 0; p < st.rm_lo.points(); ++p) {
    const cplx* r = st.rm_lo.at(p);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l)
            worst = std::max(worst, std::abs(std::conj(r[((i * n + j) * n + k) * n + l]) -
                                             r[((j * n + i) * n + l) * n + k]));
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("trace links between Rm, Ric and S") {
  const ChernStack st = build_stack(models::nonkahler_perturbed(GridSpec::periodic(2, 16)).g0);
  // Ric = g^{k l̄} R_{i j̄ k l̄}, S = g^{k l̄} R_{k l̄ i j̄}
  CHECK(max_abs_diff(st.ric, metric_trace(st.rm_lo, 2, 3, st.g.inverse())) <= 1e-12);
  CHECK(max_abs_diff(st.s, metric_trace(st.rm_lo, 0, 1, st.g.inverse())) <= 1e-12);
  // Γ recomputable and T antisymmetric
  CHECK(max_abs_diff(st.gamma, chern_connection(st.g)) == 0.0);
  CHECK(max_abs_diff(st.torsion, -1.0 * permute(st.torsion, {0, 2, 1})) == 0.0);
}

TEST_CASE("Poincaré disc is Einstein with constant -2") {
  // Interior sub-disc: the diagnostics box of the N = 32 grid.
  const GridSpec spec = GridSpec::frozen(1, 64).with_inset(6.0 / 32);
  const models::Model m = models::poincare(spec);
  const ChernStack st = build_stack(m.g0);
  const TensorField want = -2.0 * m.g0.tensor();
  CHECK(sup_abs(st.ric - want) <= 1e-4);
  CHECK(sup_abs(first_ricci_from_det(m.g0) - want) <= 1e-5);
  const RicciExtremes ex = ricci_extremes(st);
  CHECK(ex.global_max == doctest::Approx(-2.0).epsilon(1e-4));
  CHECK(ex.global_min == doctest::Approx(-2.0).epsilon(1e-4));
}

TEST_CASE("n=2 conformal metric: Ricci is -2 times the complex Hessian of u") {
  // u = 0.2 sin(2πx1) cos(2πy2)
  const GridSpec spec = GridSpec::periodic(2, 32);
  const MetricField g(models::sample(spec, valence::metric(), 0b1001, [](const models::Coords& x, cplx* o) {
    const double e = std::exp(0.2 * std::sin(2 * kPi * x[0]) * std::cos(2 * kPi * x[3]));
    o[0] = o[3] = e;
    o[1] = o[2] = 0.0;
  }));
  const TensorField want = models::sample(spec, valence::metric(), 0b1001, [](const models::Coords& x, cplx* o) {
    const double s1 = std::sin(2 * kPi * x[0]), c1 = std::cos(2 * kPi * x[0]);
    const double s2 = std::sin(2 * kPi * x[3]), c2 = std::cos(2 * kPi * x[3]);
    const double w = 4 * kPi * kPi * 0.2;
    const double uxx = -w * s1 * c2, uyy = -w * s1 * c2, uxy = -w * c1 * s2;  // (x1,x1), (y2,y2), (x1,y2)
    // ∂_i∂_{j̄}u = ¼[u_{xi xj} + u_{yi yj} + i(u_{xi yj} − u_{yi xj})]
    o[0] = -2.0 * 0.25 * uxx;
    o[3] = -2.0 * 0.25 * uyy;
    o[1] = -2.0 * 0.25 * cplx(0, uxy);
    o[2] = -2.0 * 0.25 * cplx(0, -uxy);
  });
  CHECK(sup_abs(first_ricci_from_det(g) - want) <= 4e-3);
  CHECK(sup_abs(build_stack(g).ric - want) <= 4e-3);
}

TEST_CASE("metric compatibility: covariant derivatives of g vanish") {
  const MetricField g = models::nonkahler_perturbed(GridSpec::periodic(2, 32)).g0;
  const TensorField gam = chern_connection(g);
  CHECK(sup_abs(covariant_derivative(g.tensor(), gam, Direction::Hol)) <= 1e-5);
  CHECK(sup_abs(covariant_derivative(g.tensor(), gam, Direction::Antihol)) <= 1e-5);
  CHECK(sup_abs(covariant_derivative(g.inverse(), gam, Direction::Hol)) <= 5e-5);
}

TEST_CASE("flat covariant derivative is the partial derivative") {
  const GridSpec spec = GridSpec::periodic(2, 16);
  const TensorField gam = chern_connection(models::flat(spec).g0);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  TensorField x(spec, {Slot::Up, Slot::LoBar}, 0b0101);
  for (auto& v : x.data()) v = cplx(nd(rng), nd(rng));
  CHECK(max_abs_diff(covariant_derivative(x, gam, Direction::Hol), gradient(x, true)) == 0.0);
  CHECK(max_abs_diff(covariant_derivative(x, gam, Direction::Antihol), gradient(x, false)) == 0.0);
  // scalar: ∇f = ∂f for any metric
  const TensorField gam2 = chern_connection(models::nonkahler_perturbed(spec).g0);
  TensorField f(spec, valence::scalar(), 0b0011);
  for (auto& v : f.data()) v = cplx(nd(rng), nd(rng));
  CHECK(max_abs_diff(covariant_derivative(f, gam2, Direction::Hol), gradient(f, true)) == 0.0);
}

TEST_CASE("Kähler detection by torsion size") {
  const GridSpec spec = GridSpec::periodic(2, 32);
  const ChernStack k = build_stack(models::kahler_potential(spec).g0);
  const ChernStack nk = build_stack(models::nonkahler_perturbed(spec).g0);
  CHECK(sup_norm(k.torsion, k.g) <= 1e-4);
  CHECK(sup_norm(nk.torsion, nk.g) >= 0.1);
}

TEST_CASE("bisectional probe on closed-form models") {
  std::mt19937_64 rng(42);
  BisectionalOptions opt;
  opt.max_points = 16;
  SUBCASE("flat") {
    const ChernStack st = build_stack(models::flat(GridSpec::periodic(2, 16)).g0);
    CHECK(bisectional_sup(st, rng, opt).kappa == 0.0);
  }
  SUBCASE("Poincaré disc: R/B = -λ/2") {
    const ChernStack st = build_stack(models::poincare(GridSpec::frozen(1, 32)).g0);
    CHECK(bisectional_sup(st, rng, opt).kappa == doctest::Approx(-1.0).epsilon(1e-3));
  }
  SUBCASE("flat × Poincaré: zero along the flat factor") {
    const ChernStack st = build_stack(models::product_flat_poincare(GridSpec::frozen(2, 32)).g0);
    const BisectionalResult r = bisectional_sup(st, rng, opt);
    CHECK(r.kappa <= 1e-12);
    CHECK(r.kappa >= -1e-6);
  }
}

TEST_CASE("pinching ratio on constant-curvature models") {
  std::mt19937_64 rng(9);
  PinchingOptions opt;
  opt.max_points = 16;
  SUBCASE("Poincaré disc: ratio is 1") {
    const ChernStack st = build_stack(models::poincare(GridSpec::frozen(1, 32)).g0);
    CHECK(pinching_ratio(st, rng, opt).ratio == doctest::Approx(1.0).epsilon(1e-3));
  }
  SUBCASE("complex hyperbolic ball: sup ratio is 4/9") {
    const ChernStack st = build_stack(models::complex_hyperbolic(GridSpec::frozen(2, 16), 1.5).g0);
    const double r = pinching_ratio(st, rng, opt).ratio;
    CHECK(r == doctest::Approx(4.0 / 9.0).epsilon(1e-2));
    CHECK(r <= 20.0);
  }
  SUBCASE("scale invariance under g -> 4g") {
    const models::Model m = models::product_flat_poincare(GridSpec::frozen(2, 16));
    TensorField g4 = m.g0.tensor();
    g4 *= 4.0;
    std::mt19937_64 r1(5), r2(5);
    const double a = pinching_ratio(build_stack(m.g0), r1, opt).ratio;
    const double b = pinching_ratio(build_stack(MetricField(g4)), r2, opt).ratio;
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
  }
  SUBCASE("flat has no admissible points") {
    const ChernStack st = build_stack(models::flat(GridSpec::periodic(2, 16)).g0);
    CHECK_THROWS_AS(pinching_ratio(st, rng, opt), ProbeError);
  }
}
