#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bingpp/geometry.hpp"
#include "bingpp/loss.hpp"
#include "bingpp/raster.hpp"

namespace bingpp {

/// Nearest edge pixel (and its squared Euclidean distance) for every pixel.
struct NearestEdgeMap {
  int width = 0;
  int height = 0;
  std::vector<std::int32_t> nearest_x;
  std::vector<std::int32_t> nearest_y;
  std::vector<std::int64_t> sqdist;

  std::size_t index(int x, int y) const noexcept { return static_cast<std::size_t>(y) * width + x; }
};

/// Exact squared Euclidean distance transform (separable lower envelope of
/// parabolas, column pass then row pass) carrying the argmin through both
/// passes. Among equidistant edge pixels the one with the smaller y, then the
/// smaller x, wins. Throws Error{kEmptyEdgeMap}.
NearestEdgeMap distance_transform(const EdgeMap& edges);

/// Tight box [min_x, min_y, max_x, max_y] of the nearest edge pixels of every
/// pixel whose center lies in the (clipped, closed) box r. The result is in
/// pixel-index coordinates, so a single point yields a degenerate box.
/// Throws Error{kEmptyIntersection} when r covers no pixel center.
Box box_nearest_extent(const NearestEdgeMap& nmap, const Box& r, std::uint64_t* pixel_visits = nullptr);

/// Row-wise sparse tables over the nearest-edge coordinates. extent() returns
/// exactly what box_nearest_extent returns, in O(rows) per query instead of
/// O(pixels). Maps wider or taller than 32767 pixels are rejected with
/// Error{kInvalidArgument}.
class NearestExtentIndex {
 public:
  explicit NearestExtentIndex(const NearestEdgeMap& nmap);

  Box extent(const Box& r, std::uint64_t* pixel_visits = nullptr) const;

  static bool supports(const NearestEdgeMap& nmap) noexcept;

 private:
  int width_ = 0;
  int height_ = 0;
  int levels_ = 0;
  // [level][y][x]; level k covers columns [x, x + 2^k).
  std::vector<std::int16_t> min_x_, max_x_, min_y_, max_y_;
};

struct EdgeRefineParams {
  /// gamma[t] drives iteration t; the last entry repeats when T is larger.
  std::vector<double> gamma{1.0};
  int max_iters = 3;
  double epsilon = 0.95;
  double resize_factor = 1.0 / 3.0;
  /// Answer extent queries through NearestExtentIndex rather than scanning
  /// every covered pixel. Both give identical boxes.
  bool range_index = true;

  double gamma_at(int t) const;
  /// Throws Error{kInvalidArgument}.
  void validate() const;
};

struct EdgeRefineStats {
  std::size_t passed_through = 0;  // boxes left unchanged because a step failed
  std::size_t iterations = 0;      // total box updates
  std::uint64_t pixel_visits = 0;  // pixels covered by extent queries, i.e. the direct-scan cost
};

/// Iterates r(t+1) = blend(r(t), box_nearest_extent(r(t)), gamma_t) up to
/// max_iters times per proposal, stopping once iou(r(t), r(t+1)) >= epsilon.
/// Boxes must already be in the map's frame. Scores and order are preserved;
/// a box whose update fails passes through unchanged.
std::vector<Proposal> edge_recursive_box(const NearestEdgeMap& nmap, std::span<const Proposal> props,
                                         const EdgeRefineParams& params, EdgeRefineStats* stats = nullptr);

/// One training image for the gamma search, everything in the map's frame.
struct EdgeLearningSample {
  NearestEdgeMap nmap;
  std::vector<Box> proposals;
  std::vector<Box> objects;
};

struct GammaLearningResult {
  std::vector<double> gamma;                    // chosen gamma per iteration
  std::vector<std::size_t> min_loss;            // loss at the chosen gamma
  std::vector<std::vector<std::size_t>> table;  // [iteration][0..100] loss per quantized gamma
};

/// Greedy per-iteration search over gamma in {0, 0.01, ..., 1}. The loss counts
/// objects whose best IoU with the advanced boxes is below eta; ties go to
/// the smaller gamma. All boxes advance with the chosen value before the next
/// iteration. Throws Error{kEmptyDataset}.
GammaLearningResult learn_gamma(std::span<const EdgeLearningSample> data, double eta, int iterations);

}  // namespace bingpp
