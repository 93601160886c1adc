#pragma once

// Chern connection, torsion and curvature of a Hermitian metric field, plus
// the pointwise curvature probes.
//
// Slot conventions (component index is row-major over slots):
//   gamma      Γ^k_{ij}           (Up, Lo, Lo)
//   torsion    T^k_{ij}           (Up, Lo, Lo)
//   torsion_lo T_{ij k̄}           (Lo, Lo, LoBar)
//   rm         R_{i j̄ k}^l        (Lo, LoBar, Lo, Up)
//   rm_lo      R_{i j̄ k l̄}        (Lo, LoBar, Lo, LoBar)
//   ric, s     R_{i j̄}, S_{i j̄}   (Lo, LoBar)

#include <array>
#include <cstdint>
#include <random>

#include "hrf/grid.hpp"
#include "hrf/metric.hpp"

namespace hrf {

struct ChernStack {
  MetricField g;
  TensorField dg;  // ∂_i g_{j l̄}
  TensorField gamma;
  TensorField torsion;
  TensorField torsion_lo;
  TensorField rm;
  TensorField rm_lo;
  TensorField ric;
  TensorField s;

  const GridSpec& spec() const { return g.spec(); }
  int n() const { return g.n(); }
};

/// Throws PositivityError if g is not positive-definite.
ChernStack build_stack(const MetricField& g);

/// Γ^k_{ij} = g^{k l̄}∂_i g_{j l̄} alone.
TensorField chern_connection(const MetricField& g);

/// Prepends a derivative slot: out[p, ...] = ∂_p f (Lo) or ∂_{p̄} f (LoBar).
TensorField gradient(const TensorField& f, bool holomorphic);

enum class Direction { Hol, Antihol };

/// Chern covariant derivative, new index first. ∇_p corrects Up/Lo slots with
/// Γ; ∇_{q̄} corrects UpBar/LoBar slots with conj(Γ).
TensorField covariant_derivative(const TensorField& f, const TensorField& gamma, Direction dir);

enum class LaplacianOrder {
  HolOuter,      // g^{p q̄} ∇_p ∇_{q̄}
  AntiholOuter,  // g^{p q̄} ∇_{q̄} ∇_p
  Symmetric      // average of the two
};

/// Δf with the given ordering; equal on scalars up to truncation.
TensorField laplacian(const TensorField& f, const TensorField& gamma, const TensorField& ginv,
                      LaplacianOrder order);

/// −∂_i∂_{j̄} log det g.
TensorField first_ricci_from_det(const MetricField& g);

struct BisectionalResult {
  double kappa = 0.0;
  Index point{0, 0, 0, 0};
  std::array<cplx, 2> x{}, y{};
};

struct BisectionalOptions {
  int random_pairs = 1000;
  int max_points = 256;   // interior points sampled
  int refine_points = 4;  // best points that get gradient ascent
  int starts = 32;
  int iterations = 200;
};

/// Heuristic sup of R(X,X̄,Y,Ȳ)/B(X,X̄,Y,Ȳ) with
/// B = g(X,X̄)g(Y,Ȳ) + |g(X,Ȳ)|². A lower bound of the true sup.
BisectionalResult bisectional_sup(const ChernStack& st, std::mt19937_64& rng,
                                  const BisectionalOptions& opt = {});

/// Ratio R(X,X̄,Y,Ȳ)/B at one point for given vectors.
double bisectional_ratio(int n, const cplx* rm_lo, const cplx* g, const cplx* x, const cplx* y);

struct RicciExtremes {
  ScalarField lambda_min, lambda_max;  // eigenvalues of Ric relative to g
  double global_min = 0.0, global_max = 0.0;
  Index argmax{0, 0, 0, 0};
};

/// Pencil eigenvalues of (Ric, g) per point; globals over the diagnostics box.
RicciExtremes ricci_extremes(const TensorField& ric, const MetricField& g);
RicciExtremes ricci_extremes(const ChernStack& st);

class ProbeError : public Error {
 public:
  using Error::Error;
};

struct PinchingResult {
  double ratio = 0.0;
  Index point{0, 0, 0, 0};
  std::array<cplx, 2> u{}, v{}, x{};
  long admissible_triples = 0;
};

struct PinchingOptions {
  int samples = 200;       // triples per point
  int max_points = 256;    // interior points sampled
  double ricci_floor = 1e-6;
};

/// sup over sampled unit triples of |R_{u v̄ x x̄}|² / (|g_{x x̄}|²|Ric_{u ū}||Ric_{v v̄}|).
/// Triples with |Ric_{u ū}| or |Ric_{v v̄}| ≤ ricci_floor are skipped; throws
/// ProbeError when nothing is admissible.
PinchingResult pinching_ratio(const ChernStack& st, std::mt19937_64& rng,
                              const PinchingOptions& opt = {});

/// Interior points of the diagnostics box (as stored indices) of a field with
/// the given mask, subsampled to at most max_points.
std::vector<Index> sample_points(const GridSpec& spec, std::uint8_t mask, int max_points,
                                 std::mt19937_64& rng);

}  // namespace hrf
