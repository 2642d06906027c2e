#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>

#include "bingpp/edge_refine.hpp"
#include "bingpp/error.hpp"

namespace bingpp {

namespace {

constexpr int kGammaSteps = 100;

// Pixel index range whose centers (i + 0.5) fall in [lo, hi], clamped to [0, n).
std::pair<int, int> covered_range(double lo, double hi, int n) {
  const int first = std::max(0, static_cast<int>(std::ceil(lo - 0.5)));
  const int last = std::min(n - 1, static_cast<int>(std::floor(hi - 0.5)));
  return {first, last};
}

}  // namespace

Box box_nearest_extent(const NearestEdgeMap& nmap, const Box& r, std::uint64_t* pixel_visits) {
  const auto [x0, x1] = covered_range(r.x1, r.x2, nmap.width);
  const auto [y0, y1] = covered_range(r.y1, r.y2, nmap.height);
  if (x0 > x1 || y0 > y1) throw Error(ErrorCode::kEmptyIntersection, "box covers no pixel center");

  std::int32_t min_x = nmap.width, min_y = nmap.height, max_x = -1, max_y = -1;
  for (int y = y0; y <= y1; ++y) {
    const std::int32_t* nx = nmap.nearest_x.data() + nmap.index(0, y);
    const std::int32_t* ny = nmap.nearest_y.data() + nmap.index(0, y);
    for (int x = x0; x <= x1; ++x) {
      min_x = std::min(min_x, nx[x]);
      max_x = std::max(max_x, nx[x]);
      min_y = std::min(min_y, ny[x]);
      max_y = std::max(max_y, ny[x]);
    }
  }
  if (pixel_visits) *pixel_visits += static_cast<std::uint64_t>(x1 - x0 + 1) * (y1 - y0 + 1);
  return {static_cast<double>(min_x), static_cast<double>(min_y), static_cast<double>(max_x),
          static_cast<double>(max_y)};
}

bool NearestExtentIndex::supports(const NearestEdgeMap& nmap) noexcept {
  return nmap.width > 0 && nmap.height > 0 && nmap.width <= 32767 && nmap.height <= 32767;
}

NearestExtentIndex::NearestExtentIndex(const NearestEdgeMap& nmap) : width_(nmap.width), height_(nmap.height) {
  if (!supports(nmap)) throw Error(ErrorCode::kInvalidArgument, "nearest-edge map too large to index");
  levels_ = std::bit_width(static_cast<unsigned>(width_));
  const std::size_t plane = static_cast<std::size_t>(width_) * height_;
  for (auto* t : {&min_x_, &max_x_, &min_y_, &max_y_}) t->resize(plane * levels_);
  for (std::size_t i = 0; i < plane; ++i) {
    min_x_[i] = max_x_[i] = static_cast<std::int16_t>(nmap.nearest_x[i]);
    min_y_[i] = max_y_[i] = static_cast<std::int16_t>(nmap.nearest_y[i]);
  }
  // One array at a time so each pass is a plain element-wise min or max.
  auto build = [&](std::vector<std::int16_t>& t, auto op) {
    for (int k = 1; k < levels_; ++k) {
      const int half = 1 << (k - 1);
      const int count = width_ - (1 << k) + 1;
      for (int y = 0; y < height_; ++y) {
        const std::int16_t* prev = t.data() + (k - 1) * plane + static_cast<std::size_t>(y) * width_;
        std::int16_t* cur = t.data() + k * plane + static_cast<std::size_t>(y) * width_;
        for (int x = 0; x < count; ++x) cur[x] = op(prev[x], prev[x + half]);
      }
    }
  };
  const auto lo = [](std::int16_t a, std::int16_t b) { return a < b ? a : b; };
  const auto hi = [](std::int16_t a, std::int16_t b) { return a < b ? b : a; };
  build(min_x_, lo);
  build(max_x_, hi);
  build(min_y_, lo);
  build(max_y_, hi);
}

Box NearestExtentIndex::extent(const Box& r, std::uint64_t* pixel_visits) const {
  const auto [x0, x1] = covered_range(r.x1, r.x2, width_);
  const auto [y0, y1] = covered_range(r.y1, r.y2, height_);
  if (x0 > x1 || y0 > y1) throw Error(ErrorCode::kEmptyIntersection, "box covers no pixel center");

  const int k = std::bit_width(static_cast<unsigned>(x1 - x0 + 1)) - 1;
  const std::size_t level = static_cast<std::size_t>(k) * width_ * height_;
  const int xb = x1 - (1 << k) + 1;
  std::int16_t min_x = INT16_MAX, min_y = INT16_MAX, max_x = -1, max_y = -1;
  for (int y = y0; y <= y1; ++y) {
    const std::size_t a = level + static_cast<std::size_t>(y) * width_ + x0;
    const std::size_t b = a + (xb - x0);
    min_x = std::min({min_x, min_x_[a], min_x_[b]});
    max_x = std::max({max_x, max_x_[a], max_x_[b]});
    min_y = std::min({min_y, min_y_[a], min_y_[b]});
    max_y = std::max({max_y, max_y_[a], max_y_[b]});
  }
  if (pixel_visits) *pixel_visits += static_cast<std::uint64_t>(x1 - x0 + 1) * (y1 - y0 + 1);
  return {static_cast<double>(min_x), static_cast<double>(min_y), static_cast<double>(max_x),
          static_cast<double>(max_y)};
}

double EdgeRefineParams::gamma_at(int t) const {
  if (gamma.empty()) return 1.0;
  return gamma[std::min<std::size_t>(static_cast<std::size_t>(t), gamma.size() - 1)];
}

void EdgeRefineParams::validate() const {
  for (const double g : gamma) {
    if (!(g >= 0 && g <= 1)) throw Error(ErrorCode::kInvalidArgument, "gamma must lie in [0, 1]");
  }
  if (max_iters < 1) throw Error(ErrorCode::kInvalidArgument, "edge refinement needs T >= 1");
  if (!(epsilon >= 0 && epsilon <= 1)) throw Error(ErrorCode::kInvalidArgument, "epsilon must lie in [0, 1]");
  if (!(resize_factor > 0 && resize_factor <= 1)) {
    throw Error(ErrorCode::kInvalidArgument, "resize factor must lie in (0, 1]");
  }
}

std::vector<Proposal> edge_recursive_box(const NearestEdgeMap& nmap, std::span<const Proposal> props,
                                         const EdgeRefineParams& params, EdgeRefineStats* stats) {
  params.validate();
  EdgeRefineStats local;
  std::optional<NearestExtentIndex> index;
  if (params.range_index && NearestExtentIndex::supports(nmap)) index.emplace(nmap);
  auto extent_of = [&](const Box& r) {
    return index ? index->extent(r, &local.pixel_visits) : box_nearest_extent(nmap, r, &local.pixel_visits);
  };
  std::vector<Proposal> out;
  out.reserve(props.size());
  for (const Proposal& p : props) {
    Box current = p.box;
    bool failed = false;
    for (int t = 0; t < params.max_iters; ++t) {
      Box extent;
      try {
        extent = extent_of(current);
      } catch (const Error&) {
        failed = true;
        break;
      }
      const Box next = blend(current, extent, params.gamma_at(t));
      ++local.iterations;
      const double overlap = iou(current, next);
      current = next;
      if (overlap >= params.epsilon) break;
    }
    if (failed) {
      ++local.passed_through;
      out.push_back(p);
    } else {
      out.push_back({current, p.score, ProposalSource::kEdgeRefined});
    }
  }
  if (stats) {
    stats->passed_through += local.passed_through;
    stats->iterations += local.iterations;
    stats->pixel_visits += local.pixel_visits;
  }
  return out;
}

GammaLearningResult learn_gamma(std::span<const EdgeLearningSample> data, double eta, int iterations) {
  if (data.empty()) throw Error(ErrorCode::kEmptyDataset, "gamma search needs at least one image");
  if (iterations < 1) throw Error(ErrorCode::kInvalidArgument, "gamma search needs at least one iteration");

  std::vector<std::vector<Box>> current;
  current.reserve(data.size());
  for (const EdgeLearningSample& s : data) current.push_back(s.proposals);

  std::vector<std::optional<NearestExtentIndex>> indices(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (NearestExtentIndex::supports(data[i].nmap)) indices[i].emplace(data[i].nmap);
  }

  GammaLearningResult result;
  std::vector<std::vector<Box>> extents(data.size());
  std::vector<Box> moved;
  for (int t = 0; t < iterations; ++t) {
    for (std::size_t i = 0; i < data.size(); ++i) {
      extents[i].clear();
      for (const Box& b : current[i]) {
        try {
          extents[i].push_back(indices[i] ? indices[i]->extent(b) : box_nearest_extent(data[i].nmap, b));
        } catch (const Error&) {
          extents[i].push_back(b);  // a box with no covered pixel stays put
        }
      }
    }

    std::vector<std::size_t> losses(kGammaSteps + 1, 0);
    for (int g = 0; g <= kGammaSteps; ++g) {
      const double gamma = g / static_cast<double>(kGammaSteps);
      for (std::size_t i = 0; i < data.size(); ++i) {
        moved.resize(current[i].size());
        for (std::size_t k = 0; k < moved.size(); ++k) moved[k] = blend(current[i][k], extents[i][k], gamma);
        losses[g] += zero_one_loss(moved, data[i].objects, eta);
      }
    }
    const auto best = std::min_element(losses.begin(), losses.end());  // first minimum = smallest gamma
    const int best_g = static_cast<int>(best - losses.begin());
    const double gamma = best_g / static_cast<double>(kGammaSteps);

    result.gamma.push_back(gamma);
    result.min_loss.push_back(*best);
    result.table.push_back(std::move(losses));
    for (std::size_t i = 0; i < data.size(); ++i) {
      for (std::size_t k = 0; k < current[i].size(); ++k) current[i][k] = blend(current[i][k], extents[i][k], gamma);
    }
  }
  return result;
}

}  // namespace bingpp
