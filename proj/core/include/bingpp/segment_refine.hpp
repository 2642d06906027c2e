#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bingpp/geometry.hpp"
#include "bingpp/loss.hpp"
#include "bingpp/raster.hpp"

namespace bingpp {

/// Dense grid of superpixel cells: the image resized to a fixed frame and
/// averaged over non-overlapping cell_px x cell_px blocks.
struct CellGrid {
  int grid_w = 0;
  int grid_h = 0;
  int cell_px = 4;
  std::vector<std::array<double, 3>> mean_color;  // row-major, RGB

  const std::array<double, 3>& at(int c, int r) const { return mean_color[static_cast<std::size_t>(r) * grid_w + c]; }
};

/// Horizontal span of cells [col_begin, col_end] (inclusive) on one row.
struct CellRun {
  int row = 0;
  int col_begin = 0;
  int col_end = 0;
};

struct Segment {
  int id = 0;
  int area_cells = 0;
  std::vector<CellRun> runs;
  Box bbox;  // cell units, continuous: cell (c, r) spans [c, c+1) x [r, r+1)
};

struct SegmentLabeling {
  int grid_w = 0;
  int grid_h = 0;
  std::vector<int> labels;  // per cell, 0..segments.size()-1
  std::vector<Segment> segments;
};

struct SegRefineParams {
  std::vector<double> delta_set{0.1, 0.3, 0.6};
  double k = 200.0;
  int min_size = 10;
  int frame_width = 400;
  int frame_height = 360;
  int cell_px = 4;

  /// Throws Error{kInvalidArgument}.
  void validate() const;
};

CellGrid build_cell_grid(const ColorImage& img, const SegRefineParams& params = {});

/// Graph-based greedy merging over 4-connected cells, edge weight = RGB
/// distance of cell means. Components C1, C2 joined by an edge of weight w
/// merge iff w <= min(Int(C1) + k/|C1|, Int(C2) + k/|C2|). Components smaller
/// than min_size are then merged along their cheapest edges. Labels are
/// compacted in first-occurrence (row-major) order.
SegmentLabeling segment_graph(const CellGrid& grid, double k, int min_size);

/// Fraction of the segment's cells whose centers lie in r (cell units).
double seg_overlap(const Segment& s, const Box& r);

/// For each proposal (cell units) and each delta, the tight box of the
/// proposal and every segment with seg_overlap >= delta. The output holds
/// |props| * |delta_set| proposals grouped per input in delta order.
std::vector<Proposal> segment_recursive_box(const SegmentLabeling& labeling, std::span<const Proposal> props,
                                            std::span<const double> delta_set);

/// Candidate thresholds 0.1 .. 0.9; subset bit i selects (i + 1) / 10.
inline constexpr int kDeltaCandidates = 9;
inline constexpr int kDeltaSubsets = (1 << kDeltaCandidates) - 1;
double delta_candidate(int i) noexcept;
std::vector<double> delta_subset(unsigned mask);

/// One training image for the delta search, everything in cell units.
struct SegLearningSample {
  SegmentLabeling labeling;
  std::vector<Box> proposals;
  std::vector<Box> objects;
  std::vector<std::string> classes;  // per object; empty means a single class
};

struct DeltaTableRow {
  unsigned mask = 0;
  std::size_t loss = 0;
  double dr = 0;
  double mabo = 0;
};

struct DeltaLearningResult {
  std::vector<double> best;
  unsigned best_mask = 0;
  std::size_t best_loss = 0;
  std::vector<DeltaTableRow> table;  // 511 rows, mask ascending
};

/// Exhaustive search over every non-empty subset of the nine candidates. Ties
/// prefer fewer thresholds, then the lexicographically smaller sorted set.
/// Throws Error{kEmptyDataset}.
DeltaLearningResult learn_delta(std::span<const SegLearningSample> data, double eta);

/// CSV with header subset_bitmask,loss,dr_at_eta,mabo.
std::string delta_table_csv(const DeltaLearningResult& result);

}  // namespace bingpp
