#pragma once

// Discrete complex domains and tensor fields sampled on uniform grids.
//
// A grid covers the unit box [0,1)^{2n} with N points per real axis. Real axes
// are ordered (x1, y1, x2, y2), z^a = x_a + i y_a. Fields are stored only
// along the axes they vary on ("active" axes); an inactive axis is broadcast.
// Storage is point-major with components innermost, the first active axis
// fastest.

#include <array>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace hrf {

using cplx = std::complex<double>;
using Index = std::array<int, 4>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GridError : public Error {
 public:
  using Error::Error;
};

enum class Boundary : std::uint8_t { Periodic = 0, Frozen = 1 };

constexpr int kStencilRadius = 2;
constexpr int kDiagnosticMargin = 4;

struct GridSpec {
  int n = 1;
  int N = 16;
  Boundary boundary = Boundary::Periodic;
  int shell_width = kStencilRadius;
  /// Extra physical inset of the diagnostics box (fraction of the box per
  /// side); lets refinement studies compare over one physical region.
  double diagnostic_inset = 0.0;

  static GridSpec periodic(int n, int N) { return {n, N, Boundary::Periodic, kStencilRadius, 0.0}; }
  static GridSpec frozen(int n, int N, int shell = kStencilRadius) {
    return {n, N, Boundary::Frozen, shell, 0.0};
  }
  GridSpec with_inset(double inset) const {
    GridSpec s = *this;
    s.diagnostic_inset = inset;
    return s;
  }

  int axes() const { return 2 * n; }
  double h() const { return 1.0 / N; }
  double coord(int i) const { return static_cast<double>(i) / N; }
  std::uint8_t full_mask() const { return static_cast<std::uint8_t>((1u << axes()) - 1u); }
  std::size_t total_points() const;

  /// Lower index (inclusive) of the diagnostics sub-box along each axis.
  /// Periodic grids report over everything; frozen grids drop the shell plus
  /// a fixed margin. The inset, if larger, wins.
  int interior_lo() const;
  int interior_hi() const { return N - interior_lo(); }
  bool in_shell(const Index& idx, std::uint8_t mask) const;

  void validate() const;
  bool operator==(const GridSpec&) const = default;
};

std::string to_string(Boundary b);

enum class Slot : std::uint8_t { Up = 0, Lo = 1, UpBar = 2, LoBar = 3 };

Slot conjugate(Slot s);
char slot_char(Slot s);

/// Ordered index slots of a tensor. Components are laid out row-major over
/// the slots, n values per slot.
class Valence {
 public:
  static constexpr int kMaxRank = 8;
  Valence() = default;
  Valence(std::initializer_list<Slot> slots);

  int rank() const { return rank_; }
  Slot operator[](int i) const { return slots_[i]; }
  int components(int n) const;
  Valence prepend(Slot s) const;
  Valence append(Slot s) const;
  Valence without(int a, int b) const;
  Valence replaced(int i, Slot s) const;
  Valence conjugated() const;
  std::string str() const;
  bool operator==(const Valence& o) const;

 private:
  std::array<Slot, kMaxRank> slots_{};
  int rank_ = 0;
};

namespace valence {
inline Valence scalar() { return {}; }
inline Valence metric() { return {Slot::Lo, Slot::LoBar}; }
inline Valence inverse_metric() { return {Slot::Up, Slot::UpBar}; }
}  // namespace valence

class TensorField {
 public:
  TensorField() = default;
  TensorField(const GridSpec& spec, Valence val, std::uint8_t mask);

  /// Field that is constant over the grid.
  static TensorField constant(const GridSpec& spec, Valence val, const std::vector<cplx>& comps);

  const GridSpec& spec() const { return spec_; }
  const Valence& valence() const { return val_; }
  std::uint8_t mask() const { return mask_; }
  bool active(int axis) const { return (mask_ >> axis) & 1u; }
  int comps() const { return comps_; }
  std::size_t points() const { return points_; }
  std::size_t stride(int axis) const { return stride_[axis]; }

  std::size_t offset(const Index& idx) const {
    return idx[0] * stride_[0] + idx[1] * stride_[1] + idx[2] * stride_[2] +
           idx[3] * stride_[3];
  }
  Index index_of(std::size_t point) const;

  cplx* at(std::size_t point) { return data_.data() + point * comps_; }
  const cplx* at(std::size_t point) const { return data_.data() + point * comps_; }
  cplx value(const Index& idx, int comp) const { return at(offset(idx))[comp]; }

  std::vector<cplx>& data() { return data_; }
  const std::vector<cplx>& data() const { return data_; }

  /// Materializes the field on a larger active-axis set.
  TensorField broadcast_to(std::uint8_t mask) const;
  /// Drops axes along which the samples do not vary (exact comparison).
  TensorField compacted() const;

  TensorField& operator+=(const TensorField& o);
  TensorField& operator-=(const TensorField& o);
  TensorField& operator*=(cplx s);
  TensorField conj() const;

 private:
  GridSpec spec_{};
  Valence val_{};
  std::uint8_t mask_ = 0;
  int comps_ = 1;
  std::size_t points_ = 1;
  std::array<std::size_t, 4> stride_{0, 0, 0, 0};
  std::vector<cplx> data_;
};

using ScalarField = TensorField;

TensorField operator+(TensorField a, const TensorField& b);
TensorField operator-(TensorField a, const TensorField& b);
TensorField operator*(cplx s, TensorField a);

/// Calls fn(idx) for every stored point of a field with the given mask, in
/// storage order. Inactive axes are held at zero.
template <class Fn>
void for_each_index(const GridSpec& spec, std::uint8_t mask, Fn&& fn) {
  Index ext{1, 1, 1, 1};
  for (int d = 0; d < spec.axes(); ++d)
    if ((mask >> d) & 1u) ext[d] = spec.N;
  Index idx{0, 0, 0, 0};
  for (idx[3] = 0; idx[3] < ext[3]; ++idx[3])
    for (idx[2] = 0; idx[2] < ext[2]; ++idx[2])
      for (idx[1] = 0; idx[1] < ext[1]; ++idx[1])
        for (idx[0] = 0; idx[0] < ext[0]; ++idx[0]) fn(idx);
}

/// Pointwise map: out(idx) = fn(out_ptr, in_ptrs...) over the union of the
/// inputs' active axes.
template <class Fn, class... Fs>
TensorField map_points(const GridSpec& spec, Valence out_val, Fn&& fn, const Fs&... ins) {
  std::uint8_t mask = (std::uint8_t{0} | ... | ins.mask());
  TensorField out(spec, out_val, mask);
  std::size_t lin = 0;
  for_each_index(spec, mask, [&](const Index& idx) {
    fn(out.at(lin), ins.at(ins.offset(idx))...);
    ++lin;
  });
  return out;
}

// ---- Derivatives --------------------------------------------------------

/// d/d(real axis) with 4th-order central differences; one-sided 4th-order
/// stencils within two cells of a frozen edge.
TensorField d_real(const TensorField& f, int axis);
/// ∂_a = ½(∂_{x_a} − i∂_{y_a}), componentwise.
TensorField d_hol(const TensorField& f, int a);
/// ∂_{ā} = ½(∂_{x_a} + i∂_{y_a}), componentwise.
TensorField d_antihol(const TensorField& f, int a);

/// Largest |sixth difference|/h⁶ of any component along any active axis,
/// over the diagnostics sub-box.
double sixth_derivative_scale(const TensorField& f);

// ---- Norms --------------------------------------------------------------

class MetricField;

/// Pointwise squared g-norm (every slot contracted with g or g⁻¹).
ScalarField norm2(const TensorField& t, const MetricField& g);
/// Sup over the diagnostics sub-box of the pointwise g-norm.
double sup_norm(const TensorField& t, const MetricField& g);
/// Sup of a real scalar field (real parts) over the diagnostics sub-box.
double sup_real(const ScalarField& f);
double inf_real(const ScalarField& f);
/// Largest |component| over the diagnostics sub-box.
double sup_abs(const TensorField& f);

// ---- Snapshots ----------------------------------------------------------

struct Snapshot {
  TensorField field;
  double time = 0.0;
};

/// Little-endian binary snapshot; layout documented in docs/formats.md.
void save_snapshot(const std::string& path, const TensorField& f, double time);
Snapshot load_snapshot(const std::string& path);

}  // namespace hrf
