#include "hrf/models.hpp"

#include <cmath>
#include <numbers>

namespace hrf::models {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require_n(const GridSpec& spec, int n, const char* who) {
  if (spec.n != n)
    throw GridError(std::string(who) + ": requires complex dimension n = " + std::to_string(n));
}

Model finish(std::string name, TensorField g) {
  Model m;
  m.name = std::move(name);
  m.g0 = MetricField(std::move(g));
  m.g0.validate();
  return m;
}

// Exact solution diag-scaled by (1 + λt) on the given mask.
std::function<TensorField(double)> scaled(const TensorField& g0, double lambda) {
  return [g0, lambda](double t) {
    TensorField g = g0;
    g *= 1.0 + lambda * t;
    return g;
  };
}

}  // namespace

TensorField sample(const GridSpec& spec, Valence val, std::uint8_t mask,
                   const std::function<void(const Coords&, cplx*)>& fn) {
  TensorField f(spec, val, mask);
  std::size_t lin = 0;
  for_each_index(spec, f.mask(), [&](const Index& idx) {
    Coords x{0, 0, 0, 0};
    for (int d = 0; d < spec.axes(); ++d) x[d] = spec.coord(idx[d]);
    fn(x, f.at(lin++));
  });
  return f;
}

Model flat(const GridSpec& spec) {
  std::vector<cplx> id(spec.n * spec.n, 0.0);
  for (int i = 0; i < spec.n; ++i) id[i * spec.n + i] = 1.0;
  Model m = finish("flat", TensorField::constant(spec, valence::metric(), id));
  const TensorField g0 = m.g0.tensor();
  m.exact = [g0](double) { return g0; };
  m.kahler = true;
  return m;
}

Model poincare(const GridSpec& spec, double cx, double cy, double radius) {
  require_n(spec, 1, "poincare");
  const double r2 = radius * radius;
  Model m = finish("poincare", sample(spec, valence::metric(), 0b11, [&](const Coords& x, cplx* o) {
                     const double s = ((x[0] - cx) * (x[0] - cx) + (x[1] - cy) * (x[1] - cy)) / r2;
                     if (s >= 1.0) throw GridError("poincare: patch leaves the disc; increase radius");
                     o[0] = 1.0 / ((1.0 - s) * (1.0 - s));
                   }));
  m.einstein_lambda = 2.0 / r2;
  m.exact = scaled(m.g0.tensor(), m.einstein_lambda);
  m.kahler = true;
  return m;
}

Model complex_hyperbolic(const GridSpec& spec, double radius) {
  require_n(spec, 2, "complex_hyperbolic");
  const double r2 = radius * radius;
  Model m = finish("complex_hyperbolic",
                   sample(spec, valence::metric(), 0b1111, [&](const Coords& x, cplx* o) {
                     const cplx w[2] = {cplx(x[0] - 0.5, x[1] - 0.5), cplx(x[2] - 0.5, x[3] - 0.5)};
                     const double s = (std::norm(w[0]) + std::norm(w[1])) / r2;
                     if (s >= 1.0)
                       throw GridError("complex_hyperbolic: patch leaves the ball; increase radius");
                     for (int i = 0; i < 2; ++i)
                       for (int j = 0; j < 2; ++j)
                         o[i * 2 + j] = (i == j ? 1.0 / (r2 * (1.0 - s)) : 0.0) +
                                        std::conj(w[i]) * w[j] / (r2 * r2 * (1.0 - s) * (1.0 - s));
                   }));
  m.einstein_lambda = 3.0;
  m.exact = scaled(m.g0.tensor(), m.einstein_lambda);
  m.kahler = true;
  return m;
}

Model product_flat_poincare(const GridSpec& spec, double radius) {
  require_n(spec, 2, "product_flat_poincare");
  const double r2 = radius * radius;
  auto poinc = [r2](const Coords& x) {
    const double s = ((x[2] - 0.5) * (x[2] - 0.5) + (x[3] - 0.5) * (x[3] - 0.5)) / r2;
    if (s >= 1.0) throw GridError("product_flat_poincare: patch leaves the disc");
    return 1.0 / ((1.0 - s) * (1.0 - s));
  };
  Model m = finish("product_flat_poincare",
                   sample(spec, valence::metric(), 0b1100, [&](const Coords& x, cplx* o) {
                     o[0] = 1.0;
                     o[1] = o[2] = 0.0;
                     o[3] = poinc(x);
                   }));
  const double lambda = 2.0 / r2;
  const TensorField g0 = m.g0.tensor();
  m.exact = [g0, lambda](double t) {
    TensorField g = g0;
    for (std::size_t p = 0; p < g.points(); ++p) g.at(p)[3] *= 1.0 + lambda * t;
    return g;
  };
  m.kahler = true;
  return m;
}

namespace {

struct TrigTerm {
  double c;
  bool sine;
  std::array<int, 4> k;
};

std::vector<TrigTerm> potential_terms(int n, Potential p) {
  std::vector<TrigTerm> t;
  if (n == 1)
    t = {{0.5, true, {1, 1, 0, 0}}, {0.4, false, {1, 0, 0, 0}}, {0.3, true, {0, 1, 0, 0}}};
  else
    t = {{0.5, true, {1, 0, 1, 0}}, {0.3, false, {0, 1, -1, 0}}, {0.4, true, {1, 1, 0, 0}}, {0.3, false, {0, 0, 1, 0}}};
  if (p == Potential::Mixed) {
    t.push_back({0.1, true, {2, n == 1 ? 1 : 0, n == 1 ? 0 : 1, 0}});
    t.push_back({0.1, false, {0, 2, n == 1 ? 0 : 1, 0}});
  }
  return t;
}

}  // namespace

Model kahler_potential(const GridSpec& spec, double eps, Potential potential) {
  const int n = spec.n;
  const auto terms = potential_terms(n, potential);
  const std::uint8_t mask = n == 1 ? 0b11 : 0b0111;
  Model m = finish("kahler_potential", sample(spec, valence::metric(), mask, [&](const Coords& x, cplx* o) {
                     // ψ = Σ c f(2π k·x)/(2π)², so ψ_{ab} = −k_a k_b c f(2π k·x)
                     double hess[4][4] = {};
                     for (const TrigTerm& t : terms) {
                       double th = 0.0;
                       for (int d = 0; d < 4; ++d) th += t.k[d] * x[d];
                       const double f = t.c * (t.sine ? std::sin(kTwoPi * th) : std::cos(kTwoPi * th));
                       for (int a = 0; a < 4; ++a)
                         for (int b = 0; b < 4; ++b) hess[a][b] -= t.k[a] * t.k[b] * f;
                     }
                     for (int i = 0; i < n; ++i)
                       for (int j = 0; j < n; ++j) {
                         const int xi = 2 * i, yi = 2 * i + 1, xj = 2 * j, yj = 2 * j + 1;
                         const cplx ddbar = 0.25 * cplx(hess[xi][xj] + hess[yi][yj],
                                                        hess[xi][yj] - hess[yi][xj]);
                         o[i * n + j] = (i == j ? 1.0 : 0.0) + eps * ddbar;
                       }
                   }));
  m.kahler = true;
  return m;
}

Model nonkahler_perturbed(const GridSpec& spec, double eps) {
  require_n(spec, 2, "nonkahler_perturbed");
  return finish("nonkahler_perturbed",
                sample(spec, valence::metric(), 0b0111, [&](const Coords& x, cplx* o) {
                  const double x1 = x[0], y1 = x[1], x2 = x[2];
                  o[0] = 1.0 + eps * (std::sin(kTwoPi * x2) + 0.5 * std::cos(kTwoPi * y1));
                  o[3] = 1.0 + eps * (std::cos(kTwoPi * x1) + 0.5 * std::sin(kTwoPi * (x1 + x2)));
                  o[1] = eps * 0.5 * cplx(std::cos(kTwoPi * x2), std::sin(kTwoPi * x1));
                  o[2] = std::conj(o[1]);
                }));
}

Model conformal_bump(const GridSpec& spec, double amplitude, double width) {
  const int n = spec.n;
  const double w2 = width * width;
  Model m = finish("conformal_bump",
                   sample(spec, valence::metric(), spec.full_mask(), [&](const Coords& x, cplx* o) {
                     double s = 0.0;
                     for (int d = 0; d < 2 * n; ++d) s += (x[d] - 0.5) * (x[d] - 0.5);
                     s /= w2;
                     // log(1 + |F|²) with F = (z1², √2 z1 z2, z2²)/W² holomorphic: psh
                     const double e = std::exp(amplitude * std::log1p(s * s));
                     for (int i = 0; i < n; ++i)
                       for (int j = 0; j < n; ++j) o[i * n + j] = i == j ? e : 0.0;
                   }));
  return m;
}

Model from_file(const std::string& path) {
  Snapshot s = load_snapshot(path);
  if (!(s.field.valence() == valence::metric()))
    throw Error("from_file: snapshot " + path + " does not hold a metric (valence " +
                s.field.valence().str() + ")");
  return finish("file", std::move(s.field));
}

}  // namespace hrf::models
