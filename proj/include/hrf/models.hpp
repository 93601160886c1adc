#pragma once

// Built-in initial metrics. Coordinates are the unit box; w = z − c is the
// offset from a patch centre.

#include <array>
#include <functional>
#include <string>

#include "hrf/grid.hpp"
#include "hrf/metric.hpp"

namespace hrf::models {

struct Model {
  std::string name;
  MetricField g0;
  /// Exact flow solution g(t) when known (used for frozen-boundary feeds).
  std::function<TensorField(double)> exact;
  /// λ with Ric(g0) = −λ g0 for Kähler-Einstein models, 0 otherwise.
  double einstein_lambda = 0.0;
  bool kahler = false;
};

using Coords = std::array<double, 4>;

/// Samples fn(x, comps) on the axes in `mask`; inactive coordinates are 0.
TensorField sample(const GridSpec& spec, Valence val, std::uint8_t mask,
                   const std::function<void(const Coords&, cplx*)>& fn);

Model flat(const GridSpec& spec);
/// n = 1: g = (1 − |w|²/r²)^{−2}, Ric = −(2/r²) g.
Model poincare(const GridSpec& spec, double cx = 0.5, double cy = 0.5, double radius = 1.0);
/// n = 2: g = ∂∂̄(−log(1 − |w|²/r²)), Ric = −3 g.
Model complex_hyperbolic(const GridSpec& spec, double radius = 1.0);
/// n = 2: g = diag(1, Poincaré(z2)).
Model product_flat_poincare(const GridSpec& spec, double radius = 1.0);
/// Trig: every wavenumber component is 0 or ±1, so the central stencils
/// commute on ψ's Hessian and the sampled torsion is zero to roundoff.
/// Mixed adds second harmonics; its sampled torsion sits at truncation level,
/// the generic situation for a sampled potential.
enum class Potential { Trig, Mixed };

/// g = δ + ε ∂∂̄ψ, ψ a trigonometric potential on (x1, y1[, x2]).
Model kahler_potential(const GridSpec& spec, double eps = 0.2, Potential potential = Potential::Trig);
/// Amplitude of the bundled non-Kähler metric: small enough that the N = 64
/// identity residuals sit below 1e-5.
constexpr double kBundledNonKahlerEps = 0.01;
/// Amplitude of the Kähler reference metric paired with it.
constexpr double kBundledKahlerEps = 0.1;

/// n = 2 periodic non-Kähler metric on (x1, y1, x2).
Model nonkahler_perturbed(const GridSpec& spec, double eps = 0.05);
/// g = e^u δ, u = A log(1 + |w|⁴/W⁴). u = A log(1 + |F|²) with F holomorphic,
/// so u is plurisubharmonic; ∂∂̄u vanishes only at the centre. Ric = −n∂∂̄u is
/// ≤ 0 everywhere, 0 at the centre and < 0 elsewhere (quasi-negative).
Model conformal_bump(const GridSpec& spec, double amplitude = 0.5, double width = 0.3);
/// Metric snapshot from disk.
Model from_file(const std::string& path);

}  // namespace hrf::models
