#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <map>

#include "bingpp/error.hpp"
#include "bingpp/segment_refine.hpp"

namespace bingpp {

namespace {

// Cells whose centers (i + 0.5) lie in [lo, hi].
std::pair<int, int> covered_cells(double lo, double hi) {
  return {static_cast<int>(std::ceil(lo - 0.5)), static_cast<int>(std::floor(hi - 0.5))};
}

bool may_overlap(const Segment& s, int c0, int c1, int r0, int r1) {
  return s.bbox.x1 <= c1 && s.bbox.x2 - 1 >= c0 && s.bbox.y1 <= r1 && s.bbox.y2 - 1 >= r0;
}

// Expanded box for each threshold; deltas must be ascending. Segment overlap
// is computed once per (box, segment) pair and reused across thresholds.
void expand(const SegmentLabeling& labeling, const Box& r, std::span<const double> deltas, std::vector<Box>& out) {
  out.assign(deltas.size(), r);
  const auto [c0, c1] = covered_cells(r.x1, r.x2);
  const auto [r0, r1] = covered_cells(r.y1, r.y2);
  if (c0 > c1 || r0 > r1) return;
  for (const Segment& s : labeling.segments) {
    if (!may_overlap(s, c0, c1, r0, r1)) continue;
    const double o = seg_overlap(s, r);
    for (std::size_t d = 0; d < deltas.size() && o >= deltas[d]; ++d) out[d] = union_box(out[d], s.bbox);
  }
}

bool lexicographically_smaller(unsigned a, unsigned b) {
  // Sorted element lists compared left to right; a proper prefix is smaller.
  while (a && b) {
    const int ea = std::countr_zero(a), eb = std::countr_zero(b);
    if (ea != eb) return ea < eb;
    a &= a - 1;
    b &= b - 1;
  }
  return b != 0 && a == 0;
}

}  // namespace

double seg_overlap(const Segment& s, const Box& r) {
  if (s.area_cells <= 0) throw Error(ErrorCode::kInvalidArgument, "segment has no cells");
  const auto [c0, c1] = covered_cells(r.x1, r.x2);
  const auto [r0, r1] = covered_cells(r.y1, r.y2);
  long inside = 0;
  for (const CellRun& run : s.runs) {
    if (run.row < r0 || run.row > r1) continue;
    const int lo = std::max(run.col_begin, c0);
    const int hi = std::min(run.col_end, c1);
    if (hi >= lo) inside += hi - lo + 1;
  }
  return static_cast<double>(inside) / s.area_cells;
}

std::vector<Proposal> segment_recursive_box(const SegmentLabeling& labeling, std::span<const Proposal> props,
                                            std::span<const double> delta_set) {
  if (delta_set.empty()) throw Error(ErrorCode::kInvalidArgument, "delta set must not be empty");
  // Work on ascending thresholds, emit in the caller's order.
  std::vector<std::size_t> order(delta_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return delta_set[a] < delta_set[b]; });
  std::vector<double> ascending;
  for (const std::size_t i : order) ascending.push_back(delta_set[i]);

  std::vector<Proposal> out(props.size() * delta_set.size());
  std::vector<Box> boxes;
  for (std::size_t p = 0; p < props.size(); ++p) {
    expand(labeling, props[p].box, ascending, boxes);
    for (std::size_t d = 0; d < order.size(); ++d) {
      out[p * delta_set.size() + order[d]] = {boxes[d], props[p].score, ProposalSource::kSegRefined};
    }
  }
  return out;
}

double delta_candidate(int i) noexcept { return (i + 1) / 10.0; }

std::vector<double> delta_subset(unsigned mask) {
  std::vector<double> out;
  for (int i = 0; i < kDeltaCandidates; ++i) {
    if (mask & (1u << i)) out.push_back(delta_candidate(i));
  }
  return out;
}

DeltaLearningResult learn_delta(std::span<const SegLearningSample> data, double eta) {
  if (data.empty()) throw Error(ErrorCode::kEmptyDataset, "delta search needs at least one image");

  std::vector<double> candidates;
  for (int i = 0; i < kDeltaCandidates; ++i) candidates.push_back(delta_candidate(i));

  // best[o][i]: best IoU of object o against all boxes expanded with candidate i.
  std::vector<std::array<double, kDeltaCandidates>> best;
  std::vector<std::string> classes;
  std::vector<Box> expanded;
  for (const SegLearningSample& s : data) {
    std::vector<std::array<double, kDeltaCandidates>> local(s.objects.size());
    for (auto& row : local) row.fill(0.0);
    for (const Box& p : s.proposals) {
      expand(s.labeling, p, candidates, expanded);
      for (std::size_t o = 0; o < s.objects.size(); ++o) {
        for (int i = 0; i < kDeltaCandidates; ++i) local[o][i] = std::max(local[o][i], iou(expanded[i], s.objects[o]));
      }
    }
    for (std::size_t o = 0; o < s.objects.size(); ++o) {
      best.push_back(local[o]);
      classes.push_back(o < s.classes.size() ? s.classes[o] : std::string());
    }
  }

  std::map<std::string, std::vector<std::size_t>> by_class;
  for (std::size_t o = 0; o < classes.size(); ++o) by_class[classes[o]].push_back(o);

  DeltaLearningResult result;
  result.table.reserve(kDeltaSubsets);
  bool have_best = false;
  for (unsigned mask = 1; mask <= static_cast<unsigned>(kDeltaSubsets); ++mask) {
    std::vector<double> bo(best.size(), 0.0);
    DeltaTableRow row;
    row.mask = mask;
    for (std::size_t o = 0; o < best.size(); ++o) {
      for (int i = 0; i < kDeltaCandidates; ++i) {
        if (mask & (1u << i)) bo[o] = std::max(bo[o], best[o][i]);
      }
      row.loss += bo[o] < eta;
    }
    if (!best.empty()) {
      row.dr = 1.0 - static_cast<double>(row.loss) / best.size();
      double sum = 0;
      for (const auto& [name, members] : by_class) {
        double abo = 0;
        for (const std::size_t o : members) abo += bo[o];
        sum += abo / members.size();
      }
      row.mabo = sum / by_class.size();
    }
    result.table.push_back(row);

    const bool better = !have_best || row.loss < result.best_loss ||
                        (row.loss == result.best_loss &&
                         (std::popcount(mask) < std::popcount(result.best_mask) ||
                          (std::popcount(mask) == std::popcount(result.best_mask) &&
                           lexicographically_smaller(mask, result.best_mask))));
    if (better) {
      have_best = true;
      result.best_mask = mask;
      result.best_loss = row.loss;
    }
  }
  result.best = delta_subset(result.best_mask);
  return result;
}

std::string delta_table_csv(const DeltaLearningResult& result) {
  std::string out = "subset_bitmask,loss,dr_at_eta,mabo\n";
  char buf[96];
  for (const DeltaTableRow& r : result.table) {
    std::snprintf(buf, sizeof buf, "%u,%zu,%.6f,%.6f\n", r.mask, r.loss, r.dr, r.mabo);
    out += buf;
  }
  return out;
}

}  // namespace bingpp
