#include "bingpp/geometry.hpp"

#include <algorithm>
#include <numeric>

#include "bingpp/error.hpp"

namespace bingpp {

std::string_view to_string(ProposalSource s) noexcept {
  switch (s) {
    case ProposalSource::kBing: return "bing";
    case ProposalSource::kEdgeRefined: return "edge_refined";
    case ProposalSource::kSegRefined: return "seg_refined";
    case ProposalSource::kExternal: return "external";
  }
  return "external";
}

double intersection_area(const Box& a, const Box& b) noexcept {
  const double w = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double h = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (w <= 0 || h <= 0) return 0.0;
  return w * h;
}

double iou(const Box& a, const Box& b) noexcept {
  const double inter = intersection_area(a, b);
  if (inter <= 0) return 0.0;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

Box blend(const Box& a, const Box& b, double gamma) noexcept {
  if (gamma == 0.0) return a;
  if (gamma == 1.0) return b;
  const double k = 1.0 - gamma;
  return {k * a.x1 + gamma * b.x1, k * a.y1 + gamma * b.y1, k * a.x2 + gamma * b.x2,
          k * a.y2 + gamma * b.y2};
}

Box scale_box(const Box& b, double sx, double sy) {
  if (!(sx > 0) || !(sy > 0)) throw Error(ErrorCode::kInvalidArgument, "scale factors must be positive");
  return {b.x1 * sx, b.y1 * sy, b.x2 * sx, b.y2 * sy};
}

Box clip_box(const Box& b, double width, double height) noexcept {
  return {std::clamp(b.x1, 0.0, width), std::clamp(b.y1, 0.0, height), std::clamp(b.x2, 0.0, width),
          std::clamp(b.y2, 0.0, height)};
}

Box union_box(const Box& a, const Box& b) noexcept {
  return {std::min(a.x1, b.x1), std::min(a.y1, b.y1), std::max(a.x2, b.x2), std::max(a.y2, b.y2)};
}

bool contains(const Box& outer, const Box& inner) noexcept {
  return outer.x1 <= inner.x1 && outer.y1 <= inner.y1 && outer.x2 >= inner.x2 && outer.y2 >= inner.y2;
}

void sort_by_score(std::vector<Proposal>& props) {
  std::stable_sort(props.begin(), props.end(),
                   [](const Proposal& a, const Proposal& b) { return a.score > b.score; });
}

std::vector<std::size_t> nms_indices(std::span<const Proposal> props, double rho,
                                     std::size_t max_keep) {
  if (rho < 0 || rho > 1) throw Error(ErrorCode::kInvalidArgument, "nms rho must lie in [0, 1]");
  std::vector<std::size_t> order(props.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return props[a].score > props[b].score; });

  std::vector<std::size_t> kept;
  if (max_keep == 0) return kept;
  for (const std::size_t i : order) {
    const Box& candidate = props[i].box;
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](std::size_t k) {
      return iou(props[k].box, candidate) >= rho;
    });
    if (!suppressed) {
      kept.push_back(i);
      if (kept.size() >= max_keep) break;
    }
  }
  return kept;
}

std::vector<Proposal> nms(std::span<const Proposal> props, double rho, std::size_t max_keep) {
  std::vector<Proposal> out;
  for (const std::size_t i : nms_indices(props, rho, max_keep)) out.push_back(props[i]);
  return out;
}

}  // namespace bingpp

#include "bingpp/loss.hpp"

namespace bingpp {

double best_iou(const Box& object, std::span<const Box> boxes) noexcept {
  double best = 0;
  for (const Box& b : boxes) best = std::max(best, iou(b, object));
  return best;
}

std::size_t zero_one_loss(std::span<const Box> boxes, std::span<const Box> objects, double eta) {
  std::size_t loss = 0;
  for (const Box& o : objects) loss += best_iou(o, boxes) < eta;
  return loss;
}

}  // namespace bingpp
