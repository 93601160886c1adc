#include "hrf/grid.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "hrf/metric.hpp"

namespace hrf {

std::size_t GridSpec::total_points() const {
  std::size_t p = 1;
  for (int d = 0; d < axes(); ++d) p *= static_cast<std::size_t>(N);
  return p;
}

int GridSpec::interior_lo() const {
  const int cells = boundary == Boundary::Periodic ? 0 : shell_width + kDiagnosticMargin;
  const int inset = static_cast<int>(std::ceil(diagnostic_inset * N - 1e-9));
  return std::max(cells, inset);
}

bool GridSpec::in_shell(const Index& idx, std::uint8_t mask) const {
  if (boundary == Boundary::Periodic) return false;
  for (int d = 0; d < axes(); ++d) {
    if (!((mask >> d) & 1u)) continue;
    if (idx[d] < shell_width || idx[d] >= N - shell_width) return true;
  }
  return false;
}

void GridSpec::validate() const {
  if (n != 1 && n != 2)
    throw GridError("grid: complex dimension n must be 1 or 2 (got " + std::to_string(n) + ")");
  if (N < 8) throw GridError("grid: N must be >= 8 (got " + std::to_string(N) + ")");
  if (diagnostic_inset < 0.0 || diagnostic_inset >= 0.5)
    throw GridError("grid: diagnostic_inset must lie in [0, 0.5)");
  if (boundary == Boundary::Frozen) {
    if (shell_width < kStencilRadius)
      throw GridError("grid: frozen shell_width must be >= stencil radius 2 (got " +
                      std::to_string(shell_width) + ")");
    if (2 * interior_lo() >= N)
      throw GridError("grid: frozen shell plus diagnostic margin leaves no interior (N=" +
                      std::to_string(N) + ")");
  }
}

std::string to_string(Boundary b) { return b == Boundary::Periodic ? "periodic" : "frozen"; }

Slot conjugate(Slot s) {
  switch (s) {
    case Slot::Up: return Slot::UpBar;
    case Slot::Lo: return Slot::LoBar;
    case Slot::UpBar: return Slot::Up;
    case Slot::LoBar: return Slot::Lo;
  }
  return s;
}

char slot_char(Slot s) {
  switch (s) {
    case Slot::Up: return 'U';
    case Slot::Lo: return 'L';
    case Slot::UpBar: return 'u';
    case Slot::LoBar: return 'l';
  }
  return '?';
}

Valence::Valence(std::initializer_list<Slot> slots) {
  if (slots.size() > kMaxRank) throw GridError("valence: rank too large");
  for (Slot s : slots) slots_[rank_++] = s;
}

int Valence::components(int n) const {
  int c = 1;
  for (int i = 0; i < rank_; ++i) c *= n;
  return c;
}

Valence Valence::prepend(Slot s) const {
  if (rank_ + 1 > kMaxRank) throw GridError("valence: rank too large");
  Valence v;
  v.rank_ = rank_ + 1;
  v.slots_[0] = s;
  for (int i = 0; i < rank_; ++i) v.slots_[i + 1] = slots_[i];
  return v;
}

Valence Valence::append(Slot s) const {
  if (rank_ + 1 > kMaxRank) throw GridError("valence: rank too large");
  Valence v = *this;
  v.slots_[v.rank_++] = s;
  return v;
}

Valence Valence::without(int a, int b) const {
  Valence v;
  for (int i = 0; i < rank_; ++i)
    if (i != a && i != b) v.slots_[v.rank_++] = slots_[i];
  return v;
}

Valence Valence::replaced(int i, Slot s) const {
  Valence v = *this;
  v.slots_[i] = s;
  return v;
}

Valence Valence::conjugated() const {
  Valence v = *this;
  for (int i = 0; i < rank_; ++i) v.slots_[i] = conjugate(slots_[i]);
  return v;
}

std::string Valence::str() const {
  std::string s;
  for (int i = 0; i < rank_; ++i) s += slot_char(slots_[i]);
  return s.empty() ? "-" : s;
}

bool Valence::operator==(const Valence& o) const {
  if (rank_ != o.rank_) return false;
  for (int i = 0; i < rank_; ++i)
    if (slots_[i] != o.slots_[i]) return false;
  return true;
}

// ---- TensorField ----------------------------------------------------------

TensorField::TensorField(const GridSpec& spec, Valence val, std::uint8_t mask)
    : spec_(spec), val_(val), mask_(static_cast<std::uint8_t>(mask & spec.full_mask())) {
  comps_ = val_.components(spec_.n);
  std::size_t s = 1;
  for (int d = 0; d < 4; ++d) {
    if (d < spec_.axes() && active(d)) {
      stride_[d] = s;
      s *= static_cast<std::size_t>(spec_.N);
    } else {
      stride_[d] = 0;
    }
  }
  points_ = s;
  data_.assign(points_ * comps_, cplx{0.0, 0.0});
}

TensorField TensorField::constant(const GridSpec& spec, Valence val,
                                  const std::vector<cplx>& comps) {
  TensorField f(spec, val, 0);
  if (static_cast<int>(comps.size()) != f.comps())
    throw GridError("constant field: expected " + std::to_string(f.comps()) + " components");
  std::copy(comps.begin(), comps.end(), f.data_.begin());
  return f;
}

Index TensorField::index_of(std::size_t point) const {
  Index idx{0, 0, 0, 0};
  for (int d = 0; d < spec_.axes(); ++d) {
    if (!active(d)) continue;
    idx[d] = static_cast<int>((point / stride_[d]) % spec_.N);
  }
  return idx;
}

TensorField TensorField::broadcast_to(std::uint8_t mask) const {
  mask = static_cast<std::uint8_t>(mask | mask_);
  if (mask == mask_) return *this;
  TensorField out(spec_, val_, mask);
  std::size_t lin = 0;
  for_each_index(spec_, mask, [&](const Index& idx) {
    std::copy_n(at(offset(idx)), comps_, out.at(lin));
    ++lin;
  });
  return out;
}

TensorField TensorField::compacted() const {
  std::uint8_t keep = mask_;
  for (int d = 0; d < spec_.axes(); ++d) {
    if (!active(d)) continue;
    bool varies = false;
    for (std::size_t p = 0; p < points_ && !varies; ++p) {
      Index idx = index_of(p);
      idx[d] = 0;
      const cplx* a = at(p);
      const cplx* b = at(offset(idx));
      for (int c = 0; c < comps_; ++c)
        if (a[c] != b[c]) {
          varies = true;
          break;
        }
    }
    if (!varies) keep = static_cast<std::uint8_t>(keep & ~(1u << d));
  }
  if (keep == mask_) return *this;
  TensorField out(spec_, val_, keep);
  std::size_t lin = 0;
  for_each_index(spec_, keep, [&](const Index& idx) {
    std::copy_n(at(offset(idx)), comps_, out.at(lin));
    ++lin;
  });
  return out;
}

namespace {

void check_compatible(const TensorField& a, const TensorField& b) {
  if (!(a.spec() == b.spec())) throw GridError("field arithmetic: grid mismatch");
  if (!(a.valence() == b.valence()))
    throw GridError("field arithmetic: valence mismatch " + a.valence().str() + " vs " +
                    b.valence().str());
}

}  // namespace

TensorField& TensorField::operator+=(const TensorField& o) {
  check_compatible(*this, o);
  if ((o.mask_ | mask_) != mask_) *this = broadcast_to(o.mask_);
  std::size_t lin = 0;
  for_each_index(spec_, mask_, [&](const Index& idx) {
    cplx* a = at(lin++);
    const cplx* b = o.at(o.offset(idx));
    for (int c = 0; c < comps_; ++c) a[c] += b[c];
  });
  return *this;
}

TensorField& TensorField::operator-=(const TensorField& o) {
  check_compatible(*this, o);
  if ((o.mask_ | mask_) != mask_) *this = broadcast_to(o.mask_);
  std::size_t lin = 0;
  for_each_index(spec_, mask_, [&](const Index& idx) {
    cplx* a = at(lin++);
    const cplx* b = o.at(o.offset(idx));
    for (int c = 0; c < comps_; ++c) a[c] -= b[c];
  });
  return *this;
}

TensorField& TensorField::operator*=(cplx s) {
  for (auto& v : data_) v *= s;
  return *this;
}

TensorField TensorField::conj() const {
  TensorField out = *this;
  out.val_ = val_.conjugated();
  for (auto& v : out.data_) v = std::conj(v);
  return out;
}

TensorField operator+(TensorField a, const TensorField& b) { return a += b; }
TensorField operator-(TensorField a, const TensorField& b) { return a -= b; }
TensorField operator*(cplx s, TensorField a) { return a *= s; }

// ---- Derivatives ------------------------------------------------------------

TensorField d_real(const TensorField& f, int axis) {
  const GridSpec& spec = f.spec();
  if (axis < 0 || axis >= spec.axes())
    throw GridError("derivative: axis " + std::to_string(axis) + " out of range");
  if (!f.active(axis)) return TensorField(spec, f.valence(), 0);

  TensorField out(spec, f.valence(), f.mask());
  const int N = spec.N;
  const int nc = f.comps();
  const std::size_t s = f.stride(axis);
  const double inv12h = 1.0 / (12.0 * spec.h());
  const bool periodic = spec.boundary == Boundary::Periodic;

  std::size_t lin = 0;
  for_each_index(spec, f.mask(), [&](const Index& idx) {
    const int i = idx[axis];
    const cplx* base = f.at(lin) - static_cast<std::ptrdiff_t>(i * s) * nc;  // i = 0 along axis
    auto val = [&](int j, int c) { return base[static_cast<std::ptrdiff_t>(j * s) * nc + c]; };
    cplx* o = out.at(lin);
    if (periodic) {
      const int m2 = (i - 2 + N) % N, m1 = (i - 1 + N) % N;
      const int p1 = (i + 1) % N, p2 = (i + 2) % N;
      for (int c = 0; c < nc; ++c)
        o[c] = ((val(m2, c) - val(p2, c)) + 8.0 * (val(p1, c) - val(m1, c))) * inv12h;
    } else if (i == 0) {
      for (int c = 0; c < nc; ++c)
        o[c] = (-25.0 * val(0, c) + 48.0 * val(1, c) - 36.0 * val(2, c) + 16.0 * val(3, c) -
                3.0 * val(4, c)) *
               inv12h;
    } else if (i == 1) {
      for (int c = 0; c < nc; ++c)
        o[c] = (-3.0 * val(0, c) - 10.0 * val(1, c) + 18.0 * val(2, c) - 6.0 * val(3, c) +
                val(4, c)) *
               inv12h;
    } else if (i == N - 1) {
      for (int c = 0; c < nc; ++c)
        o[c] = (25.0 * val(N - 1, c) - 48.0 * val(N - 2, c) + 36.0 * val(N - 3, c) -
                16.0 * val(N - 4, c) + 3.0 * val(N - 5, c)) *
               inv12h;
    } else if (i == N - 2) {
      for (int c = 0; c < nc; ++c)
        o[c] = (3.0 * val(N - 1, c) + 10.0 * val(N - 2, c) - 18.0 * val(N - 3, c) +
                6.0 * val(N - 4, c) - val(N - 5, c)) *
               inv12h;
    } else {
      for (int c = 0; c < nc; ++c)
        o[c] = ((val(i - 2, c) - val(i + 2, c)) + 8.0 * (val(i + 1, c) - val(i - 1, c))) * inv12h;
    }
    ++lin;
  });
  return out;
}

namespace {

TensorField complex_derivative(const TensorField& f, int a, double sign) {
  const GridSpec& spec = f.spec();
  if (a < 0 || a >= spec.n)
    throw GridError("complex derivative: axis " + std::to_string(a) + " out of range");
  const TensorField dx = d_real(f, 2 * a);
  const TensorField dy = d_real(f, 2 * a + 1);
  const int nc = f.comps();
  const cplx iy{0.0, sign};
  return map_points(
      spec, f.valence(),
      [&](cplx* o, const cplx* x, const cplx* y) {
        for (int c = 0; c < nc; ++c) o[c] = 0.5 * (x[c] + iy * y[c]);
      },
      dx, dy);
}

}  // namespace

TensorField d_hol(const TensorField& f, int a) { return complex_derivative(f, a, -1.0); }
TensorField d_antihol(const TensorField& f, int a) { return complex_derivative(f, a, 1.0); }

double sixth_derivative_scale(const TensorField& f) {
  const GridSpec& spec = f.spec();
  static constexpr double w[7] = {1, -6, 15, -20, 15, -6, 1};
  const double h6 = std::pow(spec.h(), 6);
  const bool periodic = spec.boundary == Boundary::Periodic;
  const int N = spec.N;
  double best = 0.0;
  for (int axis = 0; axis < spec.axes(); ++axis) {
    if (!f.active(axis)) continue;
    const std::size_t s = f.stride(axis);
    std::size_t lin = 0;
    for_each_index(spec, f.mask(), [&](const Index& idx) {
      const int i = idx[axis];
      const std::size_t p = lin++;
      if (!periodic && (i < 3 || i > N - 4)) return;
      const cplx* base = f.at(p) - static_cast<std::ptrdiff_t>(i * s) * f.comps();
      for (int c = 0; c < f.comps(); ++c) {
        cplx acc = 0.0;
        for (int k = -3; k <= 3; ++k) {
          int j = i + k;
          if (periodic) j = (j + N) % N;
          acc += w[k + 3] * base[static_cast<std::ptrdiff_t>(j * s) * f.comps() + c];
        }
        best = std::max(best, std::abs(acc) / h6);
      }
    });
  }
  return best;
}

// ---- Norms ------------------------------------------------------------------

namespace {

bool in_interior(const GridSpec& spec, std::uint8_t mask, const Index& idx) {
  const int lo = spec.interior_lo(), hi = spec.interior_hi();
  for (int d = 0; d < spec.axes(); ++d) {
    if (!((mask >> d) & 1u)) continue;
    if (idx[d] < lo || idx[d] >= hi) return false;
  }
  return true;
}

// |T|² with each slot contracted by its metric matrix. g and h are n×n
// row-major (g_{a b̄}, g^{a b̄}).
double local_norm2(int n, const Valence& val, const cplx* t, const cplx* g, const cplx* h) {
  const int rank = val.rank();
  int nc = 1;
  for (int r = 0; r < rank; ++r) nc *= n;
  std::array<cplx, 256> w{}, tmp{};
  std::copy_n(t, nc, w.begin());
  int inner = nc;
  for (int s = 0; s < rank; ++s) {
    inner /= n;  // block size of slots after s
    const Slot sl = val[s];
    for (int c = 0; c < nc; ++c) {
      const int b = (c / inner) % n;
      const int base = c - b * inner;
      cplx acc = 0.0;
      for (int a = 0; a < n; ++a) {
        cplx m;
        switch (sl) {
          case Slot::Lo: m = h[a * n + b]; break;
          case Slot::Up: m = g[a * n + b]; break;
          case Slot::LoBar: m = h[b * n + a]; break;
          case Slot::UpBar: m = g[b * n + a]; break;
        }
        acc += m * w[base + a * inner];
      }
      tmp[c] = acc;
    }
    std::copy_n(tmp.begin(), nc, w.begin());
  }
  double sum = 0.0;
  for (int c = 0; c < nc; ++c) sum += (std::conj(t[c]) * w[c]).real();
  return sum;
}

}  // namespace

ScalarField norm2(const TensorField& t, const MetricField& g) {
  if (!(t.spec() == g.spec())) throw GridError("norm: grid mismatch");
  const int n = t.spec().n;
  const Valence val = t.valence();
  return map_points(
      t.spec(), valence::scalar(),
      [&](cplx* o, const cplx* tt, const cplx* gg, const cplx* hh) {
        o[0] = local_norm2(n, val, tt, gg, hh);
      },
      t, g.tensor(), g.inverse());
}

double sup_real(const ScalarField& f) {
  double best = -std::numeric_limits<double>::infinity();
  std::size_t lin = 0;
  for_each_index(f.spec(), f.mask(), [&](const Index& idx) {
    const std::size_t p = lin++;
    if (!in_interior(f.spec(), f.mask(), idx)) return;
    best = std::max(best, f.at(p)[0].real());
  });
  return best;
}

double inf_real(const ScalarField& f) {
  double best = std::numeric_limits<double>::infinity();
  std::size_t lin = 0;
  for_each_index(f.spec(), f.mask(), [&](const Index& idx) {
    const std::size_t p = lin++;
    if (!in_interior(f.spec(), f.mask(), idx)) return;
    best = std::min(best, f.at(p)[0].real());
  });
  return best;
}

double sup_abs(const TensorField& f) {
  double best = 0.0;
  std::size_t lin = 0;
  for_each_index(f.spec(), f.mask(), [&](const Index& idx) {
    const std::size_t p = lin++;
    if (!in_interior(f.spec(), f.mask(), idx)) return;
    const cplx* v = f.at(p);
    for (int c = 0; c < f.comps(); ++c) best = std::max(best, std::abs(v[c]));
  });
  return best;
}

double sup_norm(const TensorField& t, const MetricField& g) {
  auto [lam, where] = g.min_eigenvalue();
  if (!(lam > 0.0))
    throw PositivityError("sup_norm: metric not positive-definite", where, lam);
  const double s = sup_real(norm2(t, g));
  return std::sqrt(std::max(0.0, s));
}

// ---- Snapshots --------------------------------------------------------------

namespace {

static_assert(std::endian::native == std::endian::little, "snapshot IO assumes little-endian host");

constexpr char kMagic[8] = {'H', 'R', 'F', 'S', 'N', 'A', 'P', '1'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw Error("snapshot: truncated header");
  return v;
}

}  // namespace

void save_snapshot(const std::string& path, const TensorField& f, double time) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("snapshot: cannot open " + path + " for writing");
  const GridSpec& spec = f.spec();
  os.write(kMagic, 8);
  put<std::uint32_t>(os, kVersion);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(spec.n));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(spec.N));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(spec.boundary));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(spec.shell_width));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(f.valence().rank()));
  for (int i = 0; i < f.valence().rank(); ++i)
    put<std::uint32_t>(os, static_cast<std::uint32_t>(f.valence()[i]));
  put<double>(os, time);
  const std::uint64_t count = spec.total_points() * static_cast<std::uint64_t>(f.comps());
  put<std::uint64_t>(os, count);
  std::vector<float> buf(2 * static_cast<std::size_t>(f.comps()));
  for_each_index(spec, spec.full_mask(), [&](const Index& idx) {
    const cplx* v = f.at(f.offset(idx));
    for (int c = 0; c < f.comps(); ++c) {
      buf[2 * c] = static_cast<float>(v[c].real());
      buf[2 * c + 1] = static_cast<float>(v[c].imag());
    }
    os.write(reinterpret_cast<const char*>(buf.data()),
             static_cast<std::streamsize>(buf.size() * sizeof(float)));
  });
  if (!os) throw Error("snapshot: write failed for " + path);
}

Snapshot load_snapshot(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("snapshot: cannot open " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kMagic, 8) != 0) throw Error("snapshot: bad magic in " + path);
  if (get<std::uint32_t>(is) != kVersion) throw Error("snapshot: unsupported version");
  GridSpec spec;
  spec.n = static_cast<int>(get<std::uint32_t>(is));
  spec.N = static_cast<int>(get<std::uint32_t>(is));
  const auto b = get<std::uint32_t>(is);
  if (b > 1) throw Error("snapshot: bad boundary mode");
  spec.boundary = static_cast<Boundary>(b);
  spec.shell_width = static_cast<int>(get<std::uint32_t>(is));
  spec.validate();
  const auto rank = get<std::uint32_t>(is);
  if (rank > static_cast<std::uint32_t>(Valence::kMaxRank)) throw Error("snapshot: bad rank");
  Valence fixed;
  for (std::uint32_t i = 0; i < rank; ++i) {
    const auto s = get<std::uint32_t>(is);
    if (s > 3) throw Error("snapshot: bad slot code");
    fixed = fixed.append(static_cast<Slot>(s));
  }
  const double time = get<double>(is);
  TensorField f(spec, fixed, spec.full_mask());
  const auto count = get<std::uint64_t>(is);
  if (count != spec.total_points() * static_cast<std::uint64_t>(f.comps()))
    throw Error("snapshot: sample count does not match header");
  std::vector<float> buf(2 * static_cast<std::size_t>(f.comps()));
  for (std::size_t p = 0; p < f.points(); ++p) {
    is.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!is) throw Error("snapshot: truncated samples in " + path);
    cplx* v = f.at(p);
    for (int c = 0; c < f.comps(); ++c) v[c] = cplx(buf[2 * c], buf[2 * c + 1]);
  }
  return {f.compacted(), time};
}

}  // namespace hrf
