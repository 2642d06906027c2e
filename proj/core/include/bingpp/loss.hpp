#pragma once

#include <span>

#include "bingpp/geometry.hpp"

namespace bingpp {

/// The 0/1 localization loss both refinement learners minimise: the number of
/// objects whose best IoU against any of the boxes falls below eta.
std::size_t zero_one_loss(std::span<const Box> boxes, std::span<const Box> objects, double eta);

/// Best IoU of one object against a set of boxes (0 for an empty set).
double best_iou(const Box& object, std::span<const Box> boxes) noexcept;

}  // namespace bingpp
