#pragma once

#include <span>
#include <string_view>
#include <vector>

namespace bingpp {

/// Axis-aligned rectangle in continuous pixel coordinates. A pixel with
/// integer index (x, y) occupies [x, x+1) x [y, y+1), so its center is at
/// (x + 0.5, y + 0.5). Area is (x2 - x1) * (y2 - y1).
struct Box {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;

  double width() const noexcept { return x2 - x1; }
  double height() const noexcept { return y2 - y1; }
  double area() const noexcept { return width() * height(); }
  bool valid() const noexcept { return x1 <= x2 && y1 <= y2; }

  friend bool operator==(const Box&, const Box&) = default;
};

enum class ProposalSource { kBing, kEdgeRefined, kSegRefined, kExternal };

std::string_view to_string(ProposalSource s) noexcept;

struct Proposal {
  Box box;
  double score = 0;
  ProposalSource source = ProposalSource::kBing;
};

/// Intersection over union; 0 when the intersection is empty or both boxes
/// are degenerate.
double iou(const Box& a, const Box& b) noexcept;

double intersection_area(const Box& a, const Box& b) noexcept;

/// Coordinate-wise (1 - gamma) * a + gamma * b.
Box blend(const Box& a, const Box& b, double gamma) noexcept;

Box scale_box(const Box& b, double sx, double sy);

/// Clamps every coordinate into [0, width] x [0, height].
Box clip_box(const Box& b, double width, double height) noexcept;

/// Tight box containing both arguments.
Box union_box(const Box& a, const Box& b) noexcept;

bool contains(const Box& outer, const Box& inner) noexcept;

/// Greedy non-maximal suppression. Proposals are visited by descending score
/// (stable, so ties keep input order); each kept proposal removes every later
/// one whose IoU with it is >= rho. The result is in kept order. Stopping
/// after max_keep survivors yields exactly the first max_keep of the full
/// result.
std::vector<Proposal> nms(std::span<const Proposal> props, double rho,
                          std::size_t max_keep = static_cast<std::size_t>(-1));

/// Indices (into the input) of the proposals nms() would keep.
std::vector<std::size_t> nms_indices(std::span<const Proposal> props, double rho,
                                     std::size_t max_keep = static_cast<std::size_t>(-1));

/// Stable sort by descending score.
void sort_by_score(std::vector<Proposal>& props);

}  // namespace bingpp
