#include "hrf/metric.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace hrf {

namespace linalg {

void inverse(int n, const cplx* a, cplx* out) {
  if (n == 1) {
    out[0] = 1.0 / a[0];
    return;
  }
  const cplx det = a[0] * a[3] - a[1] * a[2];
  out[0] = a[3] / det;
  out[1] = -a[1] / det;
  out[2] = -a[2] / det;
  out[3] = a[0] / det;
}

std::array<double, 2> hermitian_eigenvalues(int n, const cplx* a) {
  if (n == 1) return {a[0].real(), a[0].real()};
  const double p = a[0].real(), q = a[3].real();
  const double mean = 0.5 * (p + q);
  const double half = 0.5 * (p - q);
  const double r = std::sqrt(half * half + std::norm(0.5 * (a[1] + std::conj(a[2]))));
  return {mean - r, mean + r};
}

std::array<double, 2> pencil_eigenvalues(int n, const cplx* a, const cplx* b) {
  if (n == 1) {
    const double v = a[0].real() / b[0].real();
    return {v, v};
  }
  const double l00 = std::sqrt(b[0].real());
  const cplx l10 = b[2] / l00;
  const double l11 = std::sqrt(b[3].real() - std::norm(l10));
  // L⁻¹ (lower triangular)
  const double i00 = 1.0 / l00, i11 = 1.0 / l11;
  const cplx i10 = -l10 * i00 * i11;
  // C = L⁻¹ A L⁻†
  const cplx li[4] = {i00, 0.0, i10, i11};
  cplx t[4], c[4];
  for (int r = 0; r < 2; ++r)
    for (int s = 0; s < 2; ++s) t[r * 2 + s] = li[r * 2 + 0] * a[0 * 2 + s] + li[r * 2 + 1] * a[1 * 2 + s];
  for (int r = 0; r < 2; ++r)
    for (int s = 0; s < 2; ++s)
      c[r * 2 + s] = t[r * 2 + 0] * std::conj(li[s * 2 + 0]) + t[r * 2 + 1] * std::conj(li[s * 2 + 1]);
  return hermitian_eigenvalues(2, c);
}

void hermitize(int n, cplx* a) {
  for (int i = 0; i < n; ++i) {
    a[i * n + i] = a[i * n + i].real();
    for (int j = i + 1; j < n; ++j) {
      const cplx m = 0.5 * (a[i * n + j] + std::conj(a[j * n + i]));
      a[i * n + j] = m;
      a[j * n + i] = std::conj(m);
    }
  }
}

}  // namespace linalg

void hermitize(TensorField& g) {
  const int n = g.spec().n;
  for (std::size_t p = 0; p < g.points(); ++p) linalg::hermitize(n, g.at(p));
}

MetricField::MetricField(TensorField g) : g_(std::move(g)) {
  if (!(g_.valence() == valence::metric()))
    throw GridError("metric: expected valence (Lo, LoBar), got " + g_.valence().str());
  const int n = g_.spec().n;
  inv_ = map_points(
      g_.spec(), valence::inverse_metric(),
      [n](cplx* o, const cplx* a) {
        cplx inv[4];
        linalg::inverse(n, a, inv);
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l) o[k * n + l] = inv[l * n + k];
      },
      g_);
}

std::pair<double, Index> MetricField::min_eigenvalue() const {
  const int n = g_.spec().n;
  double best = std::numeric_limits<double>::infinity();
  Index where{0, 0, 0, 0};
  for (std::size_t p = 0; p < g_.points(); ++p) {
    const double lam = linalg::hermitian_eigenvalues(n, g_.at(p))[0];
    if (!(lam >= best)) {
      best = lam;
      where = g_.index_of(p);
    }
  }
  return {best, where};
}

void MetricField::validate(double floor, double hermitian_tol) const {
  const int n = g_.spec().n;
  for (std::size_t p = 0; p < g_.points(); ++p) {
    const cplx* a = g_.at(p);
    double scale = 0.0, defect = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        scale = std::max(scale, std::abs(a[i * n + j]));
        defect = std::max(defect, std::abs(a[i * n + j] - std::conj(a[j * n + i])));
      }
    if (!(defect <= hermitian_tol * std::max(1.0, scale))) {
      const Index idx = g_.index_of(p);
      std::ostringstream os;
      os << "metric: not Hermitian at (" << idx[0] << "," << idx[1] << "," << idx[2] << ","
         << idx[3] << "), defect " << defect;
      throw GridError(os.str());
    }
  }
  auto [lam, where] = min_eigenvalue();
  if (!(lam > floor)) {
    std::ostringstream os;
    os << "metric: not positive-definite; min eigenvalue " << lam << " at (" << where[0] << ","
       << where[1] << "," << where[2] << "," << where[3] << ")";
    throw PositivityError(os.str(), where, lam);
  }
}

}  // namespace hrf
