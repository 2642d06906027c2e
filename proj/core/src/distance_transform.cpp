#include <algorithm>
#include <cstdint>
#include <limits>
#include <vector>

#include "bingpp/edge_refine.hpp"
#include "bingpp/error.hpp"

namespace bingpp {

namespace {

constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max();

// Exact rational num / den with den > 0, plus the two infinities that bound
// the envelope. Values stay far inside int64 for any realistic image side.
struct Boundary {
  std::int64_t num = 0;
  std::int64_t den = 1;
  int inf = 0;  // -1: -inf, +1: +inf

  static Boundary minus_inf() { return {0, 1, -1}; }
  static Boundary plus_inf() { return {0, 1, +1}; }

  bool less(const Boundary& o) const {
    if (inf != o.inf) return inf < o.inf;
    if (inf != 0) return false;
    return num * o.den < o.num * den;
  }
  bool less_than(std::int64_t x) const { return inf < 0 || (inf == 0 && num < x * den); }
  bool equals(std::int64_t x) const { return inf == 0 && num == x * den; }
};

// Lower envelope of the parabolas (x - q)^2 + f[q]. For each x the minimum
// value and its argmin are written; among tied minimisers prefer(a, b)
// decides. Only finite f entries contribute.
template <class Prefer>
void envelope_1d(const std::vector<std::int64_t>& f, std::vector<std::int64_t>& value, std::vector<int>& arg,
                 std::vector<int>& v, std::vector<Boundary>& z, Prefer prefer) {
  const int n = static_cast<int>(f.size());
  v.resize(n);
  z.resize(n + 1);
  int k = -1;
  auto cross = [&](int q, int p) {
    Boundary b;
    b.num = (f[q] + static_cast<std::int64_t>(q) * q) - (f[p] + static_cast<std::int64_t>(p) * p);
    b.den = 2 * static_cast<std::int64_t>(q - p);
    return b;
  };
  for (int q = 0; q < n; ++q) {
    if (f[q] == kInf) continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = Boundary::minus_inf();
      z[1] = Boundary::plus_inf();
      continue;
    }
    Boundary s = cross(q, v[k]);
    // Pop only parabolas that are strictly hidden; one that touches the
    // envelope at a single point stays so ties at that point remain visible.
    while (s.less(z[k])) {
      --k;
      s = cross(q, v[k]);
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = Boundary::plus_inf();
  }

  value.assign(n, kInf);
  arg.assign(n, -1);
  if (k < 0) return;
  int j = 0;
  for (int x = 0; x < n; ++x) {
    while (j + 1 <= k && z[j + 1].less_than(x)) ++j;
    int best = v[j];
    std::int64_t best_val = static_cast<std::int64_t>(x - best) * (x - best) + f[best];
    for (int m = j; m + 1 <= k && z[m + 1].equals(x); ++m) {
      const int cand = v[m + 1];
      const std::int64_t cand_val = static_cast<std::int64_t>(x - cand) * (x - cand) + f[cand];
      if (cand_val < best_val || (cand_val == best_val && prefer(cand, best))) {
        best = cand;
        best_val = cand_val;
      }
    }
    value[x] = best_val;
    arg[x] = best;
  }
}

}  // namespace

NearestEdgeMap distance_transform(const EdgeMap& edges) {
  const int w = edges.width;
  const int h = edges.height;
  if (w < 1 || h < 1 || edges.count() == 0) throw Error(ErrorCode::kEmptyEdgeMap, "edge map has no edge pixels");

  std::vector<int> v;
  std::vector<Boundary> z;
  std::vector<std::int64_t> f, value;
  std::vector<int> arg;

  // Column pass: nearest edge within each column.
  std::vector<std::int64_t> col_val(static_cast<std::size_t>(w) * h);
  std::vector<std::int32_t> col_y(static_cast<std::size_t>(w) * h);
  f.resize(h);
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) f[y] = edges.at(x, y) ? 0 : kInf;
    envelope_1d(f, value, arg, v, z, [](int a, int b) { return a < b; });
    for (int y = 0; y < h; ++y) {
      col_val[static_cast<std::size_t>(y) * w + x] = value[y];
      col_y[static_cast<std::size_t>(y) * w + x] = arg[y];
    }
  }

  NearestEdgeMap out;
  out.width = w;
  out.height = h;
  out.nearest_x.resize(static_cast<std::size_t>(w) * h);
  out.nearest_y.resize(static_cast<std::size_t>(w) * h);
  out.sqdist.resize(static_cast<std::size_t>(w) * h);

  // Row pass over the column results; ties prefer the smaller edge y, then x.
  f.resize(w);
  for (int y = 0; y < h; ++y) {
    const std::size_t row = static_cast<std::size_t>(y) * w;
    for (int x = 0; x < w; ++x) f[x] = col_val[row + x];
    envelope_1d(f, value, arg, v, z, [&](int a, int b) {
      const int ya = col_y[row + a], yb = col_y[row + b];
      return ya != yb ? ya < yb : a < b;
    });
    for (int x = 0; x < w; ++x) {
      out.sqdist[row + x] = value[x];
      out.nearest_x[row + x] = arg[x];
      out.nearest_y[row + x] = col_y[row + arg[x]];
    }
  }
  return out;
}

}  // namespace bingpp
