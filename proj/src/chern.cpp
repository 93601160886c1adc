#include "hrf/chern.hpp"

#include <cmath>

#include "hrf/tensor.hpp"

namespace hrf {

TensorField gradient(const TensorField& f, bool holomorphic) {
  const GridSpec& spec = f.spec();
  const int n = spec.n;
  std::vector<TensorField> d;
  std::uint8_t mask = 0;
  for (int p = 0; p < n; ++p) {
    d.push_back(holomorphic ? d_hol(f, p) : d_antihol(f, p));
    mask |= d.back().mask();
  }
  // Broadcast to a common mask so storage offsets agree.
  for (auto& x : d) x = x.broadcast_to(mask);
  TensorField out(spec, f.valence().prepend(holomorphic ? Slot::Lo : Slot::LoBar), mask);
  const int nc = f.comps();
  for (std::size_t pt = 0; pt < out.points(); ++pt) {
    cplx* o = out.at(pt);
    for (int p = 0; p < n; ++p) std::copy_n(d[p].at(pt), nc, o + p * nc);
  }
  return out;
}

TensorField chern_connection(const MetricField& g) {
  // Γ^k_{ij} = Σ_l g^{k l̄} ∂_i g_{j l̄}
  return contract(g.inverse(), 1, gradient(g.tensor(), true), 2);
}

namespace {

struct CovTerm {
  int out;    // output component
  int q;      // component of the input
  int gam;    // component of Γ
  double sign;
};

}  // namespace

TensorField covariant_derivative(const TensorField& f, const TensorField& gamma, Direction dir) {
  if (!(f.spec() == gamma.spec())) throw GridError("covariant derivative: grid mismatch");
  if (!(gamma.valence() == Valence{Slot::Up, Slot::Lo, Slot::Lo}))
    throw GridError("covariant derivative: connection must have valence ULL");
  const bool hol = dir == Direction::Hol;
  const int n = f.spec().n, rank = f.valence().rank(), nc = f.comps();
  const Valence& val = f.valence();
  std::vector<CovTerm> terms;
  for (int p = 0; p < n; ++p) {
    for (int c = 0; c < nc; ++c) {
      const int out = p * nc + c;
      int st = nc;
      for (int s = 0; s < rank; ++s) {
        st /= n;
        const int a = (c / st) % n;
        const int base = c - a * st;
        const Slot sl = val[s];
        for (int m = 0; m < n; ++m) {
          const int q = base + m * st;
          if (hol && sl == Slot::Up) terms.push_back({out, q, a * n * n + p * n + m, 1.0});
          if (hol && sl == Slot::Lo) terms.push_back({out, q, m * n * n + p * n + a, -1.0});
          if (!hol && sl == Slot::UpBar) terms.push_back({out, q, a * n * n + p * n + m, 1.0});
          if (!hol && sl == Slot::LoBar) terms.push_back({out, q, m * n * n + p * n + a, -1.0});
        }
      }
    }
  }
  const TensorField grad = gradient(f, hol);
  TensorField out = map_points(
      f.spec(), grad.valence(),
      [&](cplx* o, const cplx* d, const cplx* x, const cplx* gm) {
        std::copy_n(d, n * nc, o);
        for (const CovTerm& t : terms) {
          const cplx gv = hol ? gm[t.gam] : std::conj(gm[t.gam]);
          o[t.out] += t.sign * gv * x[t.q];
        }
      },
      grad, f, gamma);
  return out;
}

TensorField laplacian(const TensorField& f, const TensorField& gamma, const TensorField& ginv,
                      LaplacianOrder order) {
  auto hol_outer = [&] {
    const TensorField x =
        covariant_derivative(covariant_derivative(f, gamma, Direction::Antihol), gamma,
                             Direction::Hol);
    return metric_trace(x, 0, 1, ginv);
  };
  auto antihol_outer = [&] {
    const TensorField y =
        covariant_derivative(covariant_derivative(f, gamma, Direction::Hol), gamma,
                             Direction::Antihol);
    return metric_trace(y, 1, 0, ginv);
  };
  switch (order) {
    case LaplacianOrder::HolOuter: return hol_outer();
    case LaplacianOrder::AntiholOuter: return antihol_outer();
    case LaplacianOrder::Symmetric: {
      TensorField a = hol_outer();
      a += antihol_outer();
      a *= 0.5;
      return a;
    }
  }
  return hol_outer();
}

TensorField first_ricci_from_det(const MetricField& g) {
  const int n = g.n();
  auto [lam, where] = g.min_eigenvalue();
  if (!(lam > 0.0)) throw PositivityError("first Ricci: metric not positive-definite", where, lam);
  const ScalarField logdet = map_points(
      g.spec(), valence::scalar(),
      [n](cplx* o, const cplx* a) {
        const double det = n == 1 ? a[0].real() : (a[0] * a[3] - a[1] * a[2]).real();
        o[0] = std::log(det);
      },
      g.tensor());
  // −∂_i∂_{j̄}: antiholomorphic gradient first, then holomorphic, composed stencils.
  TensorField r = gradient(gradient(logdet, false), true);
  r *= -1.0;
  return r;
}

ChernStack build_stack(const MetricField& g) {
  auto [lam, where] = g.min_eigenvalue();
  if (!(lam > 0.0))
    throw PositivityError("chern stack: metric not positive-definite", where, lam);
  ChernStack st;
  st.g = g;
  st.dg = gradient(g.tensor(), true);
  st.gamma = contract(g.inverse(), 1, st.dg, 2);
  st.torsion = st.gamma - permute(st.gamma, {0, 2, 1});
  st.torsion_lo = permute(lower(st.torsion, 0, g.tensor()), {1, 2, 0});
  // R_{i j̄ k l̄} = −∂_i∂_{j̄} g_{k l̄} + Γ^p_{ik} ∂_{j̄} g_{p l̄}, i.e. −∂_{j̄}Γ lowered, in a
  // form whose conjugation symmetry is exact in the discrete setting.
  const TensorField dbar_g = gradient(g.tensor(), false);  // (j̄, p, l̄)
  st.rm_lo = gradient(dbar_g, true);                       // (i, j̄, k, l̄)
  st.rm_lo *= -1.0;
  st.rm_lo += permute(contract(st.gamma, 0, dbar_g, 1), {0, 2, 1, 3});
  st.rm = raise(st.rm_lo, 3, g.inverse());
  st.ric = trace(st.rm, 2, 3);
  st.s = metric_trace(st.rm_lo, 0, 1, g.inverse());
  return st;
}

}  // namespace hrf
