#include <algorithm>
#include <cmath>
#include <numeric>

#include "bingpp/error.hpp"
#include "bingpp/segment_refine.hpp"

namespace bingpp {

namespace {

class DisjointSets {
 public:
  explicit DisjointSets(int n) : parent_(n), size_(n, 1), rank_(n, 0) { std::iota(parent_.begin(), parent_.end(), 0); }

  int find(int x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  // Returns the surviving root.
  int join(int a, int b) {
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    if (rank_[a] == rank_[b]) ++rank_[a];
    return a;
  }

  int size(int root) const { return size_[root]; }

 private:
  std::vector<int> parent_;
  std::vector<int> size_;
  std::vector<int> rank_;
};

struct GraphEdge {
  double weight;
  int a, b;
};

}  // namespace

void SegRefineParams::validate() const {
  if (delta_set.empty()) throw Error(ErrorCode::kInvalidArgument, "delta set must not be empty");
  for (std::size_t i = 0; i < delta_set.size(); ++i) {
    if (!(delta_set[i] > 0 && delta_set[i] < 1)) throw Error(ErrorCode::kInvalidArgument, "delta values lie in (0, 1)");
    if (i > 0 && !(delta_set[i - 1] < delta_set[i])) {
      throw Error(ErrorCode::kInvalidArgument, "delta values must be sorted and distinct");
    }
  }
  if (!(k > 0)) throw Error(ErrorCode::kInvalidArgument, "segmentation k must be positive");
  if (min_size < 0) throw Error(ErrorCode::kInvalidArgument, "min_size must be non-negative");
  if (cell_px < 1 || frame_width < cell_px || frame_height < cell_px) {
    throw Error(ErrorCode::kInvalidArgument, "segmentation frame must hold at least one cell");
  }
}

CellGrid build_cell_grid(const ColorImage& img, const SegRefineParams& params) {
  const ColorImage frame = resize(img, params.frame_width, params.frame_height);
  CellGrid grid;
  grid.cell_px = params.cell_px;
  grid.grid_w = params.frame_width / params.cell_px;
  grid.grid_h = params.frame_height / params.cell_px;
  grid.mean_color.assign(static_cast<std::size_t>(grid.grid_w) * grid.grid_h, {0, 0, 0});

  const double norm = 1.0 / (params.cell_px * params.cell_px);
  const auto data = frame.data();
  for (int r = 0; r < grid.grid_h; ++r) {
    for (int c = 0; c < grid.grid_w; ++c) {
      std::array<double, 3> acc{0, 0, 0};
      for (int y = r * params.cell_px; y < (r + 1) * params.cell_px; ++y) {
        const std::size_t row = static_cast<std::size_t>(y) * frame.width();
        for (int x = c * params.cell_px; x < (c + 1) * params.cell_px; ++x) {
          for (int ch = 0; ch < 3; ++ch) acc[ch] += data[3 * (row + x) + ch];
        }
      }
      for (double& v : acc) v *= norm;
      grid.mean_color[static_cast<std::size_t>(r) * grid.grid_w + c] = acc;
    }
  }
  return grid;
}

SegmentLabeling segment_graph(const CellGrid& grid, double k, int min_size) {
  if (!(k > 0)) throw Error(ErrorCode::kInvalidArgument, "segmentation k must be positive");
  const int gw = grid.grid_w;
  const int gh = grid.grid_h;
  const int n = gw * gh;

  auto dist = [&](int a, int b) {
    const auto& p = grid.mean_color[a];
    const auto& q = grid.mean_color[b];
    return std::sqrt((p[0] - q[0]) * (p[0] - q[0]) + (p[1] - q[1]) * (p[1] - q[1]) + (p[2] - q[2]) * (p[2] - q[2]));
  };
  std::vector<GraphEdge> edges;
  edges.reserve(static_cast<std::size_t>(2) * n);
  for (int r = 0; r < gh; ++r) {
    for (int c = 0; c < gw; ++c) {
      const int i = r * gw + c;
      if (c + 1 < gw) edges.push_back({dist(i, i + 1), i, i + 1});
      if (r + 1 < gh) edges.push_back({dist(i, i + gw), i, i + gw});
    }
  }
  std::stable_sort(edges.begin(), edges.end(), [](const GraphEdge& x, const GraphEdge& y) { return x.weight < y.weight; });

  DisjointSets sets(n);
  std::vector<double> threshold(n, k);  // Int(C) + k / |C|, with Int = 0 for a single cell
  for (const GraphEdge& e : edges) {
    int a = sets.find(e.a);
    int b = sets.find(e.b);
    if (a == b) continue;
    if (e.weight <= threshold[a] && e.weight <= threshold[b]) {
      const int root = sets.join(a, b);
      // Edges arrive in ascending order, so e.weight is the new internal maximum.
      threshold[root] = e.weight + k / sets.size(root);
    }
  }
  for (const GraphEdge& e : edges) {
    const int a = sets.find(e.a);
    const int b = sets.find(e.b);
    if (a != b && (sets.size(a) < min_size || sets.size(b) < min_size)) sets.join(a, b);
  }

  SegmentLabeling out;
  out.grid_w = gw;
  out.grid_h = gh;
  out.labels.assign(n, -1);
  std::vector<int> compact(n, -1);
  for (int i = 0; i < n; ++i) {
    const int root = sets.find(i);
    if (compact[root] < 0) {
      compact[root] = static_cast<int>(out.segments.size());
      Segment s;
      s.id = compact[root];
      s.bbox = {static_cast<double>(gw), static_cast<double>(gh), 0, 0};
      out.segments.push_back(s);
    }
    out.labels[i] = compact[root];
  }
  for (int r = 0; r < gh; ++r) {
    int c = 0;
    while (c < gw) {
      const int label = out.labels[r * gw + c];
      int end = c;
      while (end + 1 < gw && out.labels[r * gw + end + 1] == label) ++end;
      Segment& s = out.segments[label];
      s.runs.push_back({r, c, end});
      s.area_cells += end - c + 1;
      s.bbox.x1 = std::min(s.bbox.x1, static_cast<double>(c));
      s.bbox.y1 = std::min(s.bbox.y1, static_cast<double>(r));
      s.bbox.x2 = std::max(s.bbox.x2, static_cast<double>(end + 1));
      s.bbox.y2 = std::max(s.bbox.y2, static_cast<double>(r + 1));
      c = end + 1;
    }
  }
  return out;
}

}  // namespace bingpp
