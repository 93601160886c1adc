#pragma once

#include "hrf/grid.hpp"

namespace hrf {

class PositivityError : public Error {
 public:
  PositivityError(const std::string& what, Index worst, double eigenvalue)
      : Error(what), worst_(worst), eigenvalue_(eigenvalue) {}
  const Index& worst_point() const { return worst_; }
  double eigenvalue() const { return eigenvalue_; }

 private:
  Index worst_;
  double eigenvalue_;
};

/// Hermitian positive-definite g_{i j̄} per grid point.
class MetricField {
 public:
  MetricField() = default;
  /// Validates valence (Lo, LoBar); Hermiticity and positivity are checked by
  /// validate().
  explicit MetricField(TensorField g);

  const TensorField& tensor() const { return g_; }
  const GridSpec& spec() const { return g_.spec(); }
  int n() const { return g_.spec().n; }

  /// g^{k l̄} with g^{k l̄} g_{j l̄} = δ^k_j; valence (Up, UpBar).
  const TensorField& inverse() const { return inv_; }

  /// Throws PositivityError naming the worst point if min eigenvalue ≤ floor,
  /// GridError if the Hermitian defect exceeds tol.
  void validate(double floor = 0.0, double hermitian_tol = 1e-10) const;

  /// Smallest eigenvalue of g over all stored points, and where.
  std::pair<double, Index> min_eigenvalue() const;
  /// Largest eigenvalue of g⁻¹ (= 1/min eigenvalue of g).
  double max_inverse_eigenvalue() const { return 1.0 / min_eigenvalue().first; }

 private:
  TensorField g_;
  TensorField inv_;
};

namespace linalg {

/// n×n complex matrix ops for n ≤ 2, row-major in a flat array.
void inverse(int n, const cplx* a, cplx* out);
/// Eigenvalues (ascending) of a Hermitian matrix.
std::array<double, 2> hermitian_eigenvalues(int n, const cplx* a);
/// Generalized eigenvalues of the Hermitian pencil (a, b), b positive-definite,
/// via Cholesky reduction. Ascending.
std::array<double, 2> pencil_eigenvalues(int n, const cplx* a, const cplx* b);
/// Hermitian part: (a + a^†)/2 in place.
void hermitize(int n, cplx* a);

}  // namespace linalg

/// Symmetrizes a (Lo, LoBar) field: g ← (g + g^†)/2 pointwise.
void hermitize(TensorField& g);

}  // namespace hrf
