#include "hrf/tensor.hpp"

#include <utility>

namespace hrf {

int component(int n, const std::vector<int>& idx) {
  int c = 0;
  for (int v : idx) c = c * n + v;
  return c;
}

std::vector<int> multi_index(int n, int rank, int comp) {
  std::vector<int> idx(rank);
  for (int s = rank - 1; s >= 0; --s) {
    idx[s] = comp % n;
    comp /= n;
  }
  return idx;
}

namespace {

void check_grid(const TensorField& a, const TensorField& b) {
  if (!(a.spec() == b.spec())) throw GridError("tensor op: grid mismatch");
}

void check_slot(const TensorField& a, int s) {
  if (s < 0 || s >= a.valence().rank())
    throw GridError("tensor op: slot " + std::to_string(s) + " out of range for valence " +
                    a.valence().str());
}

int stride_of(int n, int rank, int s) {
  int st = 1;
  for (int r = s + 1; r < rank; ++r) st *= n;
  return st;
}

// Slot s of `a` replaced by the pointwise n×n matrix M: out[..b..] = Σ_m W(m,b)·a[..m..],
// W(m,b) = M[m][b] or M[b][m].
TensorField transform_slot(const TensorField& a, int s, Slot ns, const TensorField& m,
                           bool transpose) {
  check_grid(a, m);
  check_slot(a, s);
  const int n = a.spec().n, rank = a.valence().rank();
  const int st = stride_of(n, rank, s);
  const int nc = a.comps();
  return map_points(
      a.spec(), a.valence().replaced(s, ns),
      [&](cplx* o, const cplx* x, const cplx* mm) {
        for (int c = 0; c < nc; ++c) {
          const int b = (c / st) % n;
          const int base = c - b * st;
          cplx acc = 0.0;
          for (int k = 0; k < n; ++k)
            acc += (transpose ? mm[b * n + k] : mm[k * n + b]) * x[base + k * st];
          o[c] = acc;
        }
      },
      a, m);
}

}  // namespace

TensorField contract(const TensorField& a, int sa, const TensorField& b, int sb) {
  check_grid(a, b);
  check_slot(a, sa);
  check_slot(b, sb);
  const int n = a.spec().n;
  const int ra = a.valence().rank(), rb = b.valence().rank();
  Valence out_val = a.valence().without(sa, -1);
  const Valence vb = b.valence().without(sb, -1);
  for (int i = 0; i < vb.rank(); ++i) out_val = out_val.append(vb[i]);
  const int out_comps = out_val.components(n);
  // term table: for each output component, n (ia, ib) pairs
  std::vector<std::pair<int, int>> terms(static_cast<std::size_t>(out_comps) * n);
  for (int c = 0; c < out_comps; ++c) {
    const std::vector<int> idx = multi_index(n, out_val.rank(), c);
    std::vector<int> ia(idx.begin(), idx.begin() + (ra - 1));
    std::vector<int> ib(idx.begin() + (ra - 1), idx.end());
    ia.insert(ia.begin() + sa, 0);
    ib.insert(ib.begin() + sb, 0);
    for (int m = 0; m < n; ++m) {
      ia[sa] = m;
      ib[sb] = m;
      terms[static_cast<std::size_t>(c) * n + m] = {component(n, ia), component(n, ib)};
    }
  }
  (void)rb;
  return map_points(
      a.spec(), out_val,
      [&](cplx* o, const cplx* x, const cplx* y) {
        for (int c = 0; c < out_comps; ++c) {
          cplx acc = 0.0;
          for (int m = 0; m < n; ++m) {
            const auto& t = terms[static_cast<std::size_t>(c) * n + m];
            acc += x[t.first] * y[t.second];
          }
          o[c] = acc;
        }
      },
      a, b);
}

TensorField outer(const TensorField& a, const TensorField& b) {
  check_grid(a, b);
  Valence out_val = a.valence();
  for (int i = 0; i < b.valence().rank(); ++i) out_val = out_val.append(b.valence()[i]);
  const int ca = a.comps(), cb = b.comps();
  return map_points(
      a.spec(), out_val,
      [&](cplx* o, const cplx* x, const cplx* y) {
        for (int i = 0; i < ca; ++i)
          for (int j = 0; j < cb; ++j) o[i * cb + j] = x[i] * y[j];
      },
      a, b);
}

TensorField trace(const TensorField& a, int s1, int s2) {
  check_slot(a, s1);
  check_slot(a, s2);
  if (s1 == s2) throw GridError("trace: slots must differ");
  const int n = a.spec().n, rank = a.valence().rank();
  const Valence out_val = a.valence().without(s1, s2);
  const int out_comps = out_val.components(n);
  std::vector<int> terms(static_cast<std::size_t>(out_comps) * n);
  for (int c = 0; c < out_comps; ++c) {
    const std::vector<int> idx = multi_index(n, rank - 2, c);
    for (int m = 0; m < n; ++m) {
      std::vector<int> full;
      int k = 0;
      for (int s = 0; s < rank; ++s) full.push_back(s == s1 || s == s2 ? m : idx[k++]);
      terms[static_cast<std::size_t>(c) * n + m] = component(n, full);
    }
  }
  return map_points(
      a.spec(), out_val,
      [&](cplx* o, const cplx* x) {
        for (int c = 0; c < out_comps; ++c) {
          cplx acc = 0.0;
          for (int m = 0; m < n; ++m) acc += x[terms[static_cast<std::size_t>(c) * n + m]];
          o[c] = acc;
        }
      },
      a);
}

TensorField permute(const TensorField& a, const std::vector<int>& perm) {
  const int n = a.spec().n, rank = a.valence().rank();
  if (static_cast<int>(perm.size()) != rank) throw GridError("permute: wrong permutation size");
  Valence out_val;
  for (int k = 0; k < rank; ++k) {
    check_slot(a, perm[k]);
    out_val = out_val.append(a.valence()[perm[k]]);
  }
  const int nc = a.comps();
  std::vector<int> src(nc);
  for (int c = 0; c < nc; ++c) {
    const std::vector<int> idx = multi_index(n, rank, c);
    std::vector<int> in(rank);
    for (int k = 0; k < rank; ++k) in[perm[k]] = idx[k];
    src[c] = component(n, in);
  }
  return map_points(
      a.spec(), out_val,
      [&](cplx* o, const cplx* x) {
        for (int c = 0; c < nc; ++c) o[c] = x[src[c]];
      },
      a);
}

TensorField metric_trace(const TensorField& a, int s, int sbar, const TensorField& ginv) {
  check_grid(a, ginv);
  check_slot(a, s);
  check_slot(a, sbar);
  if (a.valence()[s] != Slot::Lo || a.valence()[sbar] != Slot::LoBar)
    throw GridError("metric_trace: need a Lo and a LoBar slot in " + a.valence().str());
  const int n = a.spec().n, rank = a.valence().rank();
  const Valence out_val = a.valence().without(s, sbar);
  const int out_comps = out_val.components(n);
  // terms: (component of a, index into ginv) for each (p, q)
  const int nn = n * n;
  std::vector<int> terms(static_cast<std::size_t>(out_comps) * nn);
  for (int c = 0; c < out_comps; ++c) {
    const std::vector<int> idx = multi_index(n, rank - 2, c);
    for (int p = 0; p < n; ++p)
      for (int q = 0; q < n; ++q) {
        std::vector<int> full;
        int k = 0;
        for (int r = 0; r < rank; ++r) full.push_back(r == s ? p : r == sbar ? q : idx[k++]);
        terms[static_cast<std::size_t>(c) * nn + p * n + q] = component(n, full);
      }
  }
  return map_points(
      a.spec(), out_val,
      [&](cplx* o, const cplx* x, const cplx* h) {
        for (int c = 0; c < out_comps; ++c) {
          cplx acc = 0.0;
          const int* t = terms.data() + static_cast<std::size_t>(c) * nn;
          for (int pq = 0; pq < nn; ++pq) acc += h[pq] * x[t[pq]];
          o[c] = acc;
        }
      },
      a, ginv);
}

TensorField lower(const TensorField& a, int s, const TensorField& g) {
  check_slot(a, s);
  switch (a.valence()[s]) {
    case Slot::Up: return transform_slot(a, s, Slot::LoBar, g, false);   // Σ g_{m b̄} X^m
    case Slot::UpBar: return transform_slot(a, s, Slot::Lo, g, true);    // Σ g_{b m̄} X^{m̄}
    default: throw GridError("lower: slot is not an upper index");
  }
}

TensorField raise(const TensorField& a, int s, const TensorField& ginv) {
  check_slot(a, s);
  switch (a.valence()[s]) {
    case Slot::LoBar: return transform_slot(a, s, Slot::Up, ginv, true);  // Σ g^{b m̄} a_{m̄}
    case Slot::Lo: return transform_slot(a, s, Slot::UpBar, ginv, false);  // Σ g^{m b̄} a_m
    default: throw GridError("raise: slot is not a lower index");
  }
}

}  // namespace hrf
