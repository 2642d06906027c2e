#include <algorithm>
#include <queue>
#include <random>

#include <gtest/gtest.h>

#include "bingpp/segment_refine.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace bingpp;

namespace {

using Color = std::array<double, 3>;

CellGrid uniform_grid(int w, int h, Color c) {
  CellGrid g;
  g.grid_w = w;
  g.grid_h = h;
  g.mean_color.assign(static_cast<std::size_t>(w) * h, c);
  return g;
}

void paint(CellGrid& g, int c0, int r0, int c1, int r1, Color c) {
  for (int r = r0; r < r1; ++r) {
    for (int col = c0; col < c1; ++col) g.mean_color[static_cast<std::size_t>(r) * g.grid_w + col] = c;
  }
}

// Flat-colored blocks; a tiny k keeps every block its own segment.
SegmentLabeling label_blocks(const CellGrid& g) { return segment_graph(g, 1e-3, 1); }

int label_at(const SegmentLabeling& l, int col, int row) { return l.labels[static_cast<std::size_t>(row) * l.grid_w + col]; }

CellGrid random_blocks(std::mt19937_64& rng, int w, int h, int blocks) {
  CellGrid g = uniform_grid(w, h, {128, 128, 128});
  for (int b = 0; b < blocks; ++b) {
    const int c0 = static_cast<int>(rng() % w), r0 = static_cast<int>(rng() % h);
    const int c1 = std::min(w, c0 + 1 + static_cast<int>(rng() % (w / 2 + 1)));
    const int r1 = std::min(h, r0 + 1 + static_cast<int>(rng() % (h / 2 + 1)));
    paint(g, c0, r0, c1, r1, {double(rng() % 256), double(rng() % 256), double(rng() % 256)});
  }
  return g;
}

Box random_cell_box(std::mt19937_64& rng, int w, int h) {
  std::uniform_real_distribution<double> ux(-2, w + 2), uy(-2, h + 2);
  const double a = ux(rng), b = ux(rng), c = uy(rng), d = uy(rng);
  return {std::min(a, b), std::min(c, d), std::max(a, b), std::max(c, d)};
}

void expect_valid_partition(const SegmentLabeling& l) {
  const std::size_t n = static_cast<std::size_t>(l.grid_w) * l.grid_h;
  ASSERT_EQ(l.labels.size(), n);
  std::vector<int> area(l.segments.size(), 0);
  int next_new = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const int lab = l.labels[i];
    ASSERT_GE(lab, 0);
    ASSERT_LT(lab, static_cast<int>(l.segments.size()));
    ASSERT_LE(lab, next_new) << "labels are compacted in first-occurrence order";
    if (lab == next_new) ++next_new;
    ++area[lab];
  }
  for (std::size_t s = 0; s < l.segments.size(); ++s) {
    const Segment& seg = l.segments[s];
    EXPECT_EQ(seg.id, static_cast<int>(s));
    EXPECT_EQ(seg.area_cells, area[s]);
    int run_cells = 0;
    Box tight{1e9, 1e9, -1e9, -1e9};
    for (const CellRun& run : seg.runs) {
      for (int c = run.col_begin; c <= run.col_end; ++c) EXPECT_EQ(label_at(l, c, run.row), static_cast<int>(s));
      run_cells += run.col_end - run.col_begin + 1;
      tight = {std::min(tight.x1, double(run.col_begin)), std::min(tight.y1, double(run.row)),
               std::max(tight.x2, double(run.col_end + 1)), std::max(tight.y2, double(run.row + 1))};
    }
    EXPECT_EQ(run_cells, area[s]);
    EXPECT_EQ(seg.bbox, tight);

    // 4-connected.
    std::vector<bool> seen(n, false);
    std::queue<int> q;
    const int start = seg.runs.front().row * l.grid_w + seg.runs.front().col_begin;
    q.push(start);
    seen[start] = true;
    int reached = 0;
    while (!q.empty()) {
      const int i = q.front();
      q.pop();
      ++reached;
      const int c = i % l.grid_w, r = i / l.grid_w;
      const int nb[4][2] = {{c - 1, r}, {c + 1, r}, {c, r - 1}, {c, r + 1}};
      for (const auto& [nc, nr] : nb) {
        if (nc < 0 || nr < 0 || nc >= l.grid_w || nr >= l.grid_h) continue;
        const int j = nr * l.grid_w + nc;
        if (!seen[j] && l.labels[j] == static_cast<int>(s)) {
          seen[j] = true;
          q.push(j);
        }
      }
    }
    EXPECT_EQ(reached, area[s]) << "segment " << s << " is not connected";
  }
}

}  // namespace

TEST(CellGrid, BlockMeansOnNativeFrame) {
  SegRefineParams p;
  p.frame_width = 8;
  p.frame_height = 4;
  p.cell_px = 4;
  ColorImage img(8, 4);
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 8; ++x) img.set(x, y, {static_cast<std::uint8_t>(10 * x + y), 50, static_cast<std::uint8_t>(x < 4 ? 0 : 200)});
  }
  const CellGrid g = build_cell_grid(img, p);
  ASSERT_EQ(g.grid_w, 2);
  ASSERT_EQ(g.grid_h, 1);
  EXPECT_DOUBLE_EQ(g.at(0, 0)[0], 16.5);  // mean of 10x + y over x < 4, y < 4
  EXPECT_DOUBLE_EQ(g.at(1, 0)[0], 56.5);
  EXPECT_DOUBLE_EQ(g.at(0, 0)[1], 50);
  EXPECT_DOUBLE_EQ(g.at(1, 0)[2], 200);
}

TEST(CellGrid, DefaultFrameIs100By90) {
  const CellGrid g = build_cell_grid(ColorImage(640, 480, Rgb{30, 60, 90}));
  EXPECT_EQ(g.grid_w, 100);
  EXPECT_EQ(g.grid_h, 90);
  for (const auto& c : g.mean_color) EXPECT_EQ(c, (Color{30, 60, 90}));
}

TEST(SegmentGraph, ConstantGridIsOneSegment) {
  const SegmentLabeling l = segment_graph(uniform_grid(30, 20, {7, 8, 9}), 200, 10);
  ASSERT_EQ(l.segments.size(), 1u);
  EXPECT_EQ(l.segments[0].area_cells, 600);
  EXPECT_EQ(l.segments[0].bbox, (Box{0, 0, 30, 20}));
  expect_valid_partition(l);
}

TEST(SegmentGraph, ContrastingHalvesSplit) {
  CellGrid g = uniform_grid(20, 10, {0, 0, 0});
  paint(g, 10, 0, 20, 10, {255, 255, 255});
  const SegmentLabeling l = segment_graph(g, 1.0, 1);
  ASSERT_EQ(l.segments.size(), 2u);
  EXPECT_EQ(l.segments[0].bbox, (Box{0, 0, 10, 10}));
  EXPECT_EQ(l.segments[1].bbox, (Box{10, 0, 20, 10}));
  // A large k absorbs the contrast.
  EXPECT_EQ(segment_graph(g, 1e6, 1).segments.size(), 1u);
}

TEST(SegmentGraph, MinSizeCoveringEverythingMergesAll) {
  std::mt19937_64 rng(4);
  const CellGrid g = random_blocks(rng, 16, 12, 8);
  EXPECT_EQ(segment_graph(g, 1e-3, 16 * 12).segments.size(), 1u);
}

TEST(SegmentGraph, SmallSegmentsAreAbsorbed) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const CellGrid g = random_blocks(rng, 25, 20, 12);
    const SegmentLabeling l = segment_graph(g, 50, 6);
    expect_valid_partition(l);
    for (const Segment& s : l.segments) EXPECT_GE(s.area_cells, 6);
  }
}

TEST(SegmentGraph, RandomPartitionsAreValid) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 30; ++trial) {
    CellGrid g = random_blocks(rng, 1 + static_cast<int>(rng() % 30), 1 + static_cast<int>(rng() % 30), 10);
    for (auto& c : g.mean_color) c[0] += static_cast<double>(rng() % 20);
    SCOPED_TRACE(trial);
    expect_valid_partition(segment_graph(g, 1.0 + static_cast<double>(rng() % 300), static_cast<int>(rng() % 8)));
  }
}

TEST(SegmentGraph, RejectsNonPositiveK) {
  EXPECT_BINGPP_ERROR(segment_graph(uniform_grid(3, 3, {0, 0, 0}), 0, 1), ErrorCode::kInvalidArgument);
}

TEST(SegOverlap, RunFraction) {
  CellGrid g = uniform_grid(20, 5, {0, 0, 0});
  paint(g, 5, 2, 15, 3, {255, 0, 0});  // ten cells on row 2
  const SegmentLabeling l = label_blocks(g);
  const Segment& run = l.segments[label_at(l, 5, 2)];
  ASSERT_EQ(run.area_cells, 10);
  EXPECT_DOUBLE_EQ(seg_overlap(run, {0, 0, 9, 5}), 0.4);  // columns 5..8
  EXPECT_DOUBLE_EQ(seg_overlap(run, {0, 0, 20, 5}), 1.0);
  EXPECT_DOUBLE_EQ(seg_overlap(run, {0, 3, 20, 5}), 0.0);
}

TEST(SegOverlap, MatchesCellCountOracle) {
  std::mt19937_64 rng(7);
  int checked = 0;
  while (checked < 500) {
    const int w = 2 + static_cast<int>(rng() % 30), h = 2 + static_cast<int>(rng() % 30);
    const SegmentLabeling l = label_blocks(random_blocks(rng, w, h, 6));
    for (int q = 0; q < 10; ++q, ++checked) {
      const Box r = random_cell_box(rng, w, h);
      const int s = static_cast<int>(rng() % l.segments.size());
      EXPECT_DOUBLE_EQ(seg_overlap(l.segments[s], r), oracle::seg_overlap(l.labels, w, h, s, r));
    }
  }
}

TEST(SegmentRecursiveBox, NothingSelectedKeepsBox) {
  CellGrid g = uniform_grid(40, 40, {0, 0, 0});
  paint(g, 0, 0, 10, 10, {255, 0, 0});
  const SegmentLabeling l = label_blocks(g);
  const std::vector<Proposal> props{{{30, 30, 34, 34}, 0.7}};
  const std::vector<double> deltas{0.5};
  const auto out = segment_recursive_box(l, props, deltas);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].box, props[0].box);
  EXPECT_DOUBLE_EQ(out[0].score, 0.7);
  EXPECT_EQ(out[0].source, ProposalSource::kSegRefined);
}

TEST(SegmentRecursiveBox, GrowsToSelectedSegment) {
  CellGrid g = uniform_grid(40, 40, {0, 0, 0});
  paint(g, 0, 0, 10, 10, {255, 0, 0});
  const SegmentLabeling l = label_blocks(g);
  ASSERT_EQ(l.segments.size(), 2u);
  // The block has 4 of its 100 cells inside r; the background 12 of 1500.
  const std::vector<Proposal> props{{{8, 8, 12, 12}, 1.0}};
  const std::vector<double> deltas{0.04, 0.05};
  const auto out = segment_recursive_box(l, props, deltas);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].box, (Box{0, 0, 12, 12}));
  EXPECT_EQ(out[1].box, (Box{8, 8, 12, 12}));
}

TEST(SegmentRecursiveBox, MatchesOracleContainsAndNests) {
  std::mt19937_64 rng(8);
  const std::vector<double> deltas{0.6, 0.1, 0.3};  // output follows the caller's order
  for (int trial = 0; trial < 30; ++trial) {
    const int w = 10 + static_cast<int>(rng() % 30), h = 10 + static_cast<int>(rng() % 30);
    const SegmentLabeling l = label_blocks(random_blocks(rng, w, h, 8));
    std::vector<Proposal> props;
    for (int i = 0; i < 10; ++i) props.push_back({random_cell_box(rng, w, h), 1.0 - 0.01 * i});
    const auto out = segment_recursive_box(l, props, deltas);
    ASSERT_EQ(out.size(), props.size() * deltas.size());
    for (std::size_t p = 0; p < props.size(); ++p) {
      for (std::size_t d = 0; d < deltas.size(); ++d) {
        Box want = props[p].box;
        for (std::size_t s = 0; s < l.segments.size(); ++s) {
          if (oracle::seg_overlap(l.labels, w, h, static_cast<int>(s), props[p].box) >= deltas[d]) {
            want = union_box(want, l.segments[s].bbox);
          }
        }
        const Proposal& got = out[p * deltas.size() + d];
        EXPECT_EQ(got.box, want);
        EXPECT_TRUE(contains(got.box, props[p].box));
        EXPECT_EQ(got.score, props[p].score);
      }
      const Box& loose = out[p * 3 + 1].box;   // 0.1
      const Box& mid = out[p * 3 + 2].box;     // 0.3
      const Box& strict = out[p * 3 + 0].box;  // 0.6
      EXPECT_TRUE(contains(loose, mid));
      EXPECT_TRUE(contains(mid, strict));
    }
  }
}

TEST(SegmentRecursiveBox, EmptyDeltaSet) {
  const SegmentLabeling l = label_blocks(uniform_grid(4, 4, {0, 0, 0}));
  const std::vector<Proposal> props{{{0, 0, 1, 1}, 1.0}};
  EXPECT_BINGPP_ERROR(segment_recursive_box(l, props, {}), ErrorCode::kInvalidArgument);
}

TEST(SegRefineParams, Validate) {
  EXPECT_NO_THROW(SegRefineParams{}.validate());
  SegRefineParams p;
  p.delta_set = {};
  EXPECT_BINGPP_ERROR(p.validate(), ErrorCode::kInvalidArgument);
  p.delta_set = {0.3, 0.1};
  EXPECT_BINGPP_ERROR(p.validate(), ErrorCode::kInvalidArgument);
  p.delta_set = {1.0};
  EXPECT_BINGPP_ERROR(p.validate(), ErrorCode::kInvalidArgument);
  p = {};
  p.cell_px = 0;
  EXPECT_BINGPP_ERROR(p.validate(), ErrorCode::kInvalidArgument);
}

TEST(DeltaSubsets, Enumeration) {
  EXPECT_EQ(kDeltaSubsets, 511);
  EXPECT_EQ(delta_subset(1), (std::vector<double>{0.1}));
  EXPECT_EQ(delta_subset(0b100000101).size(), 3u);
  EXPECT_DOUBLE_EQ(delta_subset(0b100000101)[2], 0.9);
}

namespace {

// Sample 1: object A = cells [0,10)^2 seen through a 5x3 corner (overlap 0.15),
// so only delta 0.1 recovers it.
// Sample 2: object (20,18,30,30) seen through (21,18,30,30), which holds 0.9
// of block C = [20,30)^2 and 0.18 of block E above it; delta 0.1 also pulls in
// E and overshoots, every larger candidate recovers the object.
std::vector<SegLearningSample> delta_fixture() {
  std::vector<SegLearningSample> data(2);
  CellGrid g1 = uniform_grid(40, 40, {0, 0, 0});
  paint(g1, 0, 0, 10, 10, {255, 0, 0});
  data[0].labeling = label_blocks(g1);
  data[0].proposals = {{0, 0, 5, 3}};
  data[0].objects = {{0, 0, 10, 10}};

  CellGrid g2 = uniform_grid(40, 40, {0, 0, 0});
  paint(g2, 20, 20, 30, 30, {0, 255, 0});
  paint(g2, 20, 10, 30, 20, {0, 0, 255});
  data[1].labeling = label_blocks(g2);
  data[1].proposals = {{21, 18, 30, 30}};
  data[1].objects = {{20, 18, 30, 30}};
  return data;
}

}  // namespace

TEST(LearnDelta, PicksSmallestCoveringSubset) {
  const auto data = delta_fixture();
  const auto r = learn_delta(data, 0.95);
  ASSERT_EQ(r.table.size(), 511u);
  for (std::size_t i = 0; i < r.table.size(); ++i) EXPECT_EQ(r.table[i].mask, i + 1);
  EXPECT_EQ(r.best, (std::vector<double>{0.1, 0.2}));
  EXPECT_EQ(r.best_mask, 0b11u);
  EXPECT_EQ(r.best_loss, 0u);
  EXPECT_EQ(r.table[0].loss, 1u);  // {0.1}
  EXPECT_EQ(r.table[1].loss, 1u);  // {0.2}
  EXPECT_DOUBLE_EQ(r.table[2].dr, 1.0);
  EXPECT_DOUBLE_EQ(r.table[2].mabo, 1.0);
  // {0.1}: object 1 exact, object 2 overshoots to (20,10,30,30), IoU 0.6.
  EXPECT_DOUBLE_EQ(r.table[0].mabo, 0.8);
  const std::size_t min_loss =
      std::min_element(r.table.begin(), r.table.end(), [](auto& a, auto& b) { return a.loss < b.loss; })->loss;
  EXPECT_EQ(r.best_loss, min_loss);
}

TEST(LearnDelta, ConstantLossPicksSmallestSingleton) {
  auto data = delta_fixture();
  data[0].proposals = data[0].objects;
  data[1].proposals = {{20, 20, 30, 30}};
  data[1].objects = {{20, 20, 30, 30}};
  const auto r = learn_delta(data, 0.5);
  for (const auto& row : r.table) EXPECT_EQ(row.loss, 0u);
  EXPECT_EQ(r.best, (std::vector<double>{0.1}));
}

TEST(LearnDelta, PerClassMabo) {
  auto data = delta_fixture();
  data[0].classes = {"a"};
  data[1].classes = {"b"};
  const auto r = learn_delta(data, 0.95);
  // {0.2}: class a gets 0.15 (the bare corner), class b gets 1.
  EXPECT_DOUBLE_EQ(r.table[1].mabo, (0.15 + 1.0) / 2);
}

TEST(LearnDelta, TableCsv) {
  const auto r = learn_delta(delta_fixture(), 0.95);
  const std::string csv = delta_table_csv(r);
  EXPECT_EQ(csv.rfind("subset_bitmask,loss,dr_at_eta,mabo\n1,1,0.500000,0.800000\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 512);
}

TEST(LearnDelta, EmptyDataset) { EXPECT_BINGPP_ERROR(learn_delta({}, 0.5), ErrorCode::kEmptyDataset); }
