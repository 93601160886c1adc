#include <algorithm>
#include <cmath>
#include <limits>

#include "hrf/chern.hpp"

namespace hrf {

std::vector<Index> sample_points(const GridSpec& spec, std::uint8_t mask, int max_points,
                                 std::mt19937_64& rng) {
  const int lo = spec.interior_lo(), hi = spec.interior_hi();
  std::vector<Index> pts;
  for_each_index(spec, mask, [&](const Index& idx) {
    for (int d = 0; d < spec.axes(); ++d)
      if (((mask >> d) & 1u) && (idx[d] < lo || idx[d] >= hi)) return;
    pts.push_back(idx);
  });
  if (static_cast<int>(pts.size()) > max_points) {
    std::shuffle(pts.begin(), pts.end(), rng);
    pts.resize(max_points);
    std::sort(pts.begin(), pts.end(), [](const Index& a, const Index& b) {
      return std::lexicographical_compare(a.rbegin(), a.rend(), b.rbegin(), b.rend());
    });
  }
  return pts;
}

namespace {

cplx gform(int n, const cplx* g, const cplx* x, const cplx* y) {
  // g(X, Ȳ) = g_{i j̄} X^i conj(Y^j)
  cplx s = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) s += g[i * n + j] * x[i] * std::conj(y[j]);
  return s;
}

// R(U, V̄, X, Ȳ) = R_{i j̄ k l̄} U^i conj(V^j) X^k conj(Y^l)
cplx rform(int n, const cplx* r, const cplx* u, const cplx* v, const cplx* x, const cplx* y) {
  cplx s = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l)
          s += r[((i * n + j) * n + k) * n + l] * u[i] * std::conj(v[j]) * x[k] * std::conj(y[l]);
  return s;
}

void random_unit(int n, const cplx* g, std::mt19937_64& rng, cplx* x) {
  std::normal_distribution<double> nd;
  for (int i = 0; i < n; ++i) x[i] = cplx(nd(rng), nd(rng));
  const double nrm = std::sqrt(gform(n, g, x, x).real());
  for (int i = 0; i < n; ++i) x[i] /= nrm;
}

void normalize(int n, const cplx* g, cplx* x) {
  const double nrm = std::sqrt(gform(n, g, x, x).real());
  for (int i = 0; i < n; ++i) x[i] /= nrm;
}

// Projected gradient ascent of R/B over unit pairs, with step backtracking.
double ascend(int n, const cplx* r, const cplx* g, cplx* x, cplx* y, int iterations) {
  double f = bisectional_ratio(n, r, g, x, y);
  double eta = 0.5;
  for (int it = 0; it < iterations && eta > 1e-12; ++it) {
    // Wirtinger gradients with respect to conj(X) and conj(Y).
    cplx gx[2] = {0, 0}, gy[2] = {0, 0};
    const double gyy = gform(n, g, y, y).real(), gxx = gform(n, g, x, x).real();
    const cplx gxy = gform(n, g, x, y);
    const double b = gxx * gyy + std::norm(gxy);
    for (int j = 0; j < n; ++j) {
      cplx rx = 0.0, ry = 0.0, gxj = 0.0, gyj = 0.0;
      for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l) {
            rx += r[((i * n + j) * n + k) * n + l] * x[i] * y[k] * std::conj(y[l]);
            ry += r[((i * n + l) * n + k) * n + j] * x[i] * std::conj(x[l]) * y[k];
          }
      for (int i = 0; i < n; ++i) {
        gxj += g[i * n + j] * x[i];
        gyj += g[i * n + j] * y[i];
      }
      const cplx bx = gyy * gxj + gxy * gyj;
      const cplx by = gxx * gyj + std::conj(gxy) * gxj;
      gx[j] = (rx - f * bx) / b;
      gy[j] = (ry - f * by) / b;
    }
    cplx nx[2], ny[2];
    while (eta > 1e-12) {
      for (int j = 0; j < n; ++j) {
        nx[j] = x[j] + eta * gx[j];
        ny[j] = y[j] + eta * gy[j];
      }
      normalize(n, g, nx);
      normalize(n, g, ny);
      const double fn = bisectional_ratio(n, r, g, nx, ny);
      if (fn > f) {
        f = fn;
        std::copy_n(nx, n, x);
        std::copy_n(ny, n, y);
        eta *= 1.5;
        break;
      }
      eta *= 0.5;
    }
  }
  return f;
}

}  // namespace

double bisectional_ratio(int n, const cplx* rm_lo, const cplx* g, const cplx* x, const cplx* y) {
  const double r = rform(n, rm_lo, x, x, y, y).real();
  const double b = gform(n, g, x, x).real() * gform(n, g, y, y).real() + std::norm(gform(n, g, x, y));
  return r / b;
}

BisectionalResult bisectional_sup(const ChernStack& st, std::mt19937_64& rng,
                                  const BisectionalOptions& opt) {
  const int n = st.n();
  const TensorField& g = st.g.tensor();
  const std::uint8_t mask = static_cast<std::uint8_t>(g.mask() | st.rm_lo.mask());
  const std::vector<Index> pts = sample_points(st.spec(), mask, opt.max_points, rng);

  struct Cand {
    double f;
    std::size_t k;
    std::array<cplx, 2> x, y;
  };
  std::vector<Cand> cands;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const cplx* r = st.rm_lo.at(st.rm_lo.offset(pts[k]));
    const cplx* gg = g.at(g.offset(pts[k]));
    Cand best{-std::numeric_limits<double>::infinity(), k, {}, {}};
    for (int t = 0; t < opt.random_pairs; ++t) {
      std::array<cplx, 2> x{}, y{};
      random_unit(n, gg, rng, x.data());
      random_unit(n, gg, rng, y.data());
      const double f = bisectional_ratio(n, r, gg, x.data(), y.data());
      if (f > best.f) best = {f, k, x, y};
    }
    cands.push_back(best);
  }
  std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) { return a.f > b.f; });
  if (static_cast<int>(cands.size()) > opt.refine_points) cands.resize(opt.refine_points);

  BisectionalResult res;
  res.kappa = -std::numeric_limits<double>::infinity();
  for (const Cand& c : cands) {
    const Index& idx = pts[c.k];
    const cplx* r = st.rm_lo.at(st.rm_lo.offset(idx));
    const cplx* gg = g.at(g.offset(idx));
    for (int s = 0; s < opt.starts; ++s) {
      std::array<cplx, 2> x = c.x, y = c.y;
      if (s > 0) {
        random_unit(n, gg, rng, x.data());
        random_unit(n, gg, rng, y.data());
      }
      const double f = ascend(n, r, gg, x.data(), y.data(), opt.iterations);
      if (f > res.kappa) {
        res.kappa = f;
        res.point = idx;
        res.x = x;
        res.y = y;
      }
    }
  }
  if (cands.empty()) res.kappa = 0.0;
  return res;
}

RicciExtremes ricci_extremes(const TensorField& ric, const MetricField& g) {
  auto [lam, where] = g.min_eigenvalue();
  if (!(lam > 0.0)) throw PositivityError("ricci extremes: metric not positive-definite", where, lam);
  const int n = g.n();
  RicciExtremes out;
  out.lambda_min = map_points(
      g.spec(), valence::scalar(),
      [n](cplx* o, const cplx* r, const cplx* gg) {
        cplx h[4];
        std::copy_n(r, n * n, h);
        linalg::hermitize(n, h);
        o[0] = linalg::pencil_eigenvalues(n, h, gg)[0];
      },
      ric, g.tensor());
  out.lambda_max = map_points(
      g.spec(), valence::scalar(),
      [n](cplx* o, const cplx* r, const cplx* gg) {
        cplx h[4];
        std::copy_n(r, n * n, h);
        linalg::hermitize(n, h);
        o[0] = linalg::pencil_eigenvalues(n, h, gg)[n - 1];
      },
      ric, g.tensor());
  out.global_min = inf_real(out.lambda_min);
  out.global_max = sup_real(out.lambda_max);
  const GridSpec& spec = g.spec();
  const int lo = spec.interior_lo(), hi = spec.interior_hi();
  std::size_t lin = 0;
  for_each_index(spec, out.lambda_max.mask(), [&](const Index& idx) {
    const std::size_t p = lin++;
    for (int d = 0; d < spec.axes(); ++d)
      if (out.lambda_max.active(d) && (idx[d] < lo || idx[d] >= hi)) return;
    if (out.lambda_max.at(p)[0].real() == out.global_max) out.argmax = idx;
  });
  return out;
}

RicciExtremes ricci_extremes(const ChernStack& st) { return ricci_extremes(st.ric, st.g); }

PinchingResult pinching_ratio(const ChernStack& st, std::mt19937_64& rng,
                              const PinchingOptions& opt) {
  const int n = st.n();
  const TensorField& g = st.g.tensor();
  const std::uint8_t mask =
      static_cast<std::uint8_t>(g.mask() | st.rm_lo.mask() | st.ric.mask());
  const std::vector<Index> pts = sample_points(st.spec(), mask, opt.max_points, rng);

  // Fixed directions first (coordinate axes and diagonals), then random ones.
  std::vector<std::array<cplx, 2>> fixed;
  if (n == 1) {
    fixed.push_back({1.0, 0.0});
  } else {
    fixed = {{1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}, {1.0, cplx(0, 1)}, {1.0, -1.0}};
  }

  PinchingResult res;
  for (const Index& idx : pts) {
    const cplx* r = st.rm_lo.at(st.rm_lo.offset(idx));
    const cplx* gg = g.at(g.offset(idx));
    const cplx* ric = st.ric.at(st.ric.offset(idx));
    auto ricci = [&](const cplx* u) {
      cplx s = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) s += ric[i * n + j] * u[i] * std::conj(u[j]);
      return std::abs(s.real());
    };
    auto consider = [&](std::array<cplx, 2> u, std::array<cplx, 2> v, std::array<cplx, 2> x) {
      normalize(n, gg, u.data());
      normalize(n, gg, v.data());
      normalize(n, gg, x.data());
      const double ru = ricci(u.data()), rv = ricci(v.data());
      if (!(ru > opt.ricci_floor) || !(rv > opt.ricci_floor)) return;
      const double gxx = gform(n, gg, x.data(), x.data()).real();
      const double num = std::norm(rform(n, r, u.data(), v.data(), x.data(), x.data()));
      const double ratio = num / (gxx * gxx * ru * rv);
      ++res.admissible_triples;
      if (ratio > res.ratio) {
        res.ratio = ratio;
        res.point = idx;
        res.u = u;
        res.v = v;
        res.x = x;
      }
    };
    for (const auto& u : fixed)
      for (const auto& v : fixed)
        for (const auto& x : fixed) consider(u, v, x);
    for (int t = 0; t < opt.samples; ++t) {
      std::array<cplx, 2> u{}, v{}, x{};
      random_unit(n, gg, rng, u.data());
      random_unit(n, gg, rng, v.data());
      random_unit(n, gg, rng, x.data());
      consider(u, v, x);
    }
  }
  if (res.admissible_triples == 0)
    throw ProbeError("pinching: no admissible probe points (Ricci degenerate everywhere)");
  return res;
}

}  // namespace hrf
