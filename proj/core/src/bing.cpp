#include "bingpp/bing.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "bingpp/error.hpp"

namespace bingpp {

std::vector<WindowSize> default_window_sizes() {
  static constexpr int kSides[] = {16, 32, 64, 128, 256, 512};
  std::vector<WindowSize> sizes;
  for (int h : kSides) {
    for (int w : kSides) sizes.push_back({w, h});
  }
  return sizes;
}

Filter BinarizedModel::reconstructed() const {
  Filter out{};
  for (const BasisVector& b : basis) {
    for (int i = 0; i < kFeatureDim; ++i) out[i] += (b.a_plus & feature_bit(i)) ? b.beta : -b.beta;
  }
  return out;
}

void BinarizedModel::validate() const {
  if (basis.empty()) throw Error(ErrorCode::kMalformedModelFile, "model has no basis vectors");
  if (n_g < 1 || n_g > 8) throw Error(ErrorCode::kMalformedModelFile, "n_g must lie in [1, 8]");
  if (sizes.empty()) throw Error(ErrorCode::kMalformedModelFile, "model has no window sizes");
  if (calib.size() != sizes.size()) {
    throw Error(ErrorCode::kMalformedModelFile, "calibration count does not match size count");
  }
  for (const WindowSize& s : sizes) {
    if (s.width < 1 || s.height < 1) throw Error(ErrorCode::kMalformedModelFile, "window size must be positive");
  }
}

std::vector<BasisVector> binarize_filter(const Filter& w, int n_w) {
  if (n_w < 1) throw Error(ErrorCode::kInvalidArgument, "n_w must be >= 1");
  Filter residual = w;
  std::vector<BasisVector> basis;
  basis.reserve(n_w);
  for (int j = 0; j < n_w; ++j) {
    BasisVector b;
    double dot = 0;
    for (int i = 0; i < kFeatureDim; ++i) {
      if (residual[i] >= 0) {
        b.a_plus |= feature_bit(i);
        dot += residual[i];
      } else {
        dot -= residual[i];
      }
    }
    b.beta = dot / kFeatureDim;
    for (int i = 0; i < kFeatureDim; ++i) residual[i] -= (b.a_plus & feature_bit(i)) ? b.beta : -b.beta;
    basis.push_back(b);
  }
  return basis;
}

BinarizedModel make_model(const Filter& w, int n_w, int n_g, std::vector<WindowSize> sizes) {
  BinarizedModel m;
  m.w = w;
  m.basis = binarize_filter(w, n_w);
  m.n_g = n_g;
  m.calib.assign(sizes.size(), Calibration{});
  m.sizes = std::move(sizes);
  m.validate();
  return m;
}

std::array<std::uint64_t, 8> bit_planes(const NGFeature& feat) noexcept {
  std::array<std::uint64_t, 8> planes{};
  for (int i = 0; i < kFeatureDim; ++i) {
    for (int k = 0; k < 8; ++k) {
      if (feat[i] & (1u << (7 - k))) planes[k] |= feature_bit(i);
    }
  }
  return planes;
}

double score_exact(const BinarizedModel& model, const NGFeature& feat) noexcept {
  double s = 0;
  for (int i = 0; i < kFeatureDim; ++i) s += model.w[i] * feat[i];
  return s;
}

double score_fast(const BinarizedModel& model, std::span<const std::uint64_t> planes) noexcept {
  const int n_g = std::min<int>(model.n_g, static_cast<int>(planes.size()));
  double s = 0;
  for (const BasisVector& b : model.basis) {
    long long acc = 0;
    for (int k = 0; k < n_g; ++k) {
      const int on = std::popcount(b.a_plus & planes[k]);
      const int all = std::popcount(planes[k]);
      acc += static_cast<long long>(2 * on - all) << (7 - k);
    }
    s += b.beta * static_cast<double>(acc);
  }
  return s;
}

double calibrate(const BinarizedModel& model, std::size_t size_index, double raw) {
  if (size_index >= model.calib.size()) throw Error(ErrorCode::kInvalidArgument, "size index out of range");
  const Calibration& c = model.calib[size_index];
  return c.v * raw + c.t;
}

NGFeature extract_ng(const GradientMap& grad, const Box& window) {
  const Box clipped = clip_box(window, grad.width, grad.height);
  if (!(clipped.width() > 0) || !(clipped.height() > 0)) {
    throw Error(ErrorCode::kEmptyIntersection, "window does not intersect the image");
  }
  const double cw = clipped.width() / kFeatureSide;
  const double ch = clipped.height() / kFeatureSide;

  // Overlap length of pixel [p, p+1) with [lo, hi).
  auto overlap = [](int p, double lo, double hi) { return std::max(0.0, std::min<double>(p + 1, hi) - std::max<double>(p, lo)); };

  NGFeature out{};
  for (int r = 0; r < kFeatureSide; ++r) {
    const double y0 = clipped.y1 + r * ch;
    const double y1 = clipped.y1 + (r + 1) * ch;
    for (int c = 0; c < kFeatureSide; ++c) {
      const double x0 = clipped.x1 + c * cw;
      const double x1 = clipped.x1 + (c + 1) * cw;
      double acc = 0;
      for (int py = static_cast<int>(std::floor(y0)); py < std::min<int>(static_cast<int>(std::ceil(y1)), grad.height); ++py) {
        const double oy = overlap(py, y0, y1);
        if (oy <= 0) continue;
        for (int px = static_cast<int>(std::floor(x0)); px < std::min<int>(static_cast<int>(std::ceil(x1)), grad.width); ++px) {
          const double ox = overlap(px, x0, x1);
          if (ox > 0) acc += ox * oy * grad.mag_at(px, py);
        }
      }
      out[r * kFeatureSide + c] = static_cast<std::uint8_t>(std::clamp(std::lround(acc / (cw * ch)), 0L, 255L));
    }
  }
  return out;
}

NGFeature extract_ng(const GrayImage& img, const Box& window) { return extract_ng(gradients(img), window); }

std::optional<SizeLevel> SizeLevel::build(const GrayImage& img, WindowSize size, std::size_t size_index) {
  const int lw = static_cast<int>(std::lround(static_cast<double>(img.width()) * kFeatureSide / size.width));
  const int lh = static_cast<int>(std::lround(static_cast<double>(img.height()) * kFeatureSide / size.height));
  if (lw < kFeatureSide || lh < kFeatureSide) return std::nullopt;

  SizeLevel level;
  level.size_index_ = size_index;
  level.width_ = lw;
  level.height_ = lh;
  level.grid_w_ = lw - kFeatureSide + 1;
  level.grid_h_ = lh - kFeatureSide + 1;
  level.sx_ = static_cast<double>(img.width()) / lw;
  level.sy_ = static_cast<double>(img.height()) / lh;
  level.mag_ = gradients(resize(img, lw, lh)).mag;
  return level;
}

NGFeature SizeLevel::feature_at(int x, int y) const {
  NGFeature f{};
  for (int r = 0; r < kFeatureSide; ++r) {
    const std::uint8_t* row = mag_.data() + static_cast<std::size_t>(y + r) * width_ + x;
    std::copy(row, row + kFeatureSide, f.begin() + r * kFeatureSide);
  }
  return f;
}

Box SizeLevel::box_at(int x, int y) const noexcept {
  return {x * sx_, y * sy_, (x + kFeatureSide) * sx_, (y + kFeatureSide) * sy_};
}

std::vector<double> SizeLevel::score_all(const BinarizedModel& model) const {
  const int n_g = std::clamp(model.n_g, 1, 8);
  const std::size_t cells = static_cast<std::size_t>(grid_w_) * grid_h_;
  std::vector<double> scores(cells);

  // rows[k][y * grid_w + x]: bit (7-k) of mag[y][x .. x+7], column x in bit 7.
  std::vector<std::vector<std::uint8_t>> rows(n_g, std::vector<std::uint8_t>(static_cast<std::size_t>(height_) * grid_w_));
  for (int k = 0; k < n_g; ++k) {
    const int shift = 7 - k;
    for (int y = 0; y < height_; ++y) {
      const std::uint8_t* m = mag_.data() + static_cast<std::size_t>(y) * width_;
      std::uint8_t* out = rows[k].data() + static_cast<std::size_t>(y) * grid_w_;
      unsigned acc = 0;
      for (int x = 0; x < width_; ++x) {
        acc = ((acc << 1) | ((m[x] >> shift) & 1u)) & 0xFFu;
        if (x >= kFeatureSide - 1) out[x - kFeatureSide + 1] = static_cast<std::uint8_t>(acc);
      }
    }
  }

  std::array<std::uint64_t, 8> planes{};
  for (int x = 0; x < grid_w_; ++x) {
    planes.fill(0);
    for (int y = 0; y < height_; ++y) {
      for (int k = 0; k < n_g; ++k) {
        planes[k] = (planes[k] << 8) | rows[k][static_cast<std::size_t>(y) * grid_w_ + x];
      }
      if (y >= kFeatureSide - 1) {
        scores[static_cast<std::size_t>(y - kFeatureSide + 1) * grid_w_ + x] =
            score_fast(model, std::span<const std::uint64_t>(planes.data(), n_g));
      }
    }
  }
  return scores;
}

namespace {

// Grid offsets (dx, dy) at which two equal 8x8 windows overlap with IoU >= rho.
std::vector<std::pair<int, int>> suppression_offsets(double rho) {
  std::vector<std::pair<int, int>> out;
  const Box origin{0, 0, kFeatureSide, kFeatureSide};
  for (int dy = -kFeatureSide; dy <= kFeatureSide; ++dy) {
    for (int dx = -kFeatureSide; dx <= kFeatureSide; ++dx) {
      const Box other{static_cast<double>(dx), static_cast<double>(dy), static_cast<double>(dx + kFeatureSide),
                      static_cast<double>(dy + kFeatureSide)};
      if (iou(origin, other) >= rho) out.emplace_back(dx, dy);
    }
  }
  return out;
}

// Greedy IoU-NMS restricted to one size level. All windows share a shape, so
// the IoU between two of them depends only on their grid offset.
std::vector<std::size_t> level_nms(const std::vector<double>& scores, int grid_w, int grid_h, int keep,
                                   const std::vector<std::pair<int, int>>& offsets) {
  std::vector<std::size_t> heap(scores.size());
  std::iota(heap.begin(), heap.end(), 0);
  // Max-heap on score; equal scores pop in row-major order.
  auto less = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] < scores[b];
    return a > b;
  };
  std::make_heap(heap.begin(), heap.end(), less);

  std::vector<std::uint8_t> suppressed(scores.size(), 0);
  std::vector<std::size_t> kept;
  while (!heap.empty() && static_cast<int>(kept.size()) < keep) {
    std::pop_heap(heap.begin(), heap.end(), less);
    const std::size_t i = heap.back();
    heap.pop_back();
    if (suppressed[i]) continue;
    kept.push_back(i);
    const int x = static_cast<int>(i % grid_w);
    const int y = static_cast<int>(i / grid_w);
    for (const auto& [dx, dy] : offsets) {
      const int nx = x + dx, ny = y + dy;
      if (nx >= 0 && ny >= 0 && nx < grid_w && ny < grid_h) {
        suppressed[static_cast<std::size_t>(ny) * grid_w + nx] = 1;
      }
    }
  }
  return kept;
}

}  // namespace

std::vector<ScanCandidate> scan_candidates(const GrayImage& img, const BinarizedModel& model,
                                           const ScanParams& params) {
  model.validate();
  const auto offsets = suppression_offsets(params.per_size_nms);
  std::vector<ScanCandidate> all;
  for (std::size_t si = 0; si < model.sizes.size(); ++si) {
    const auto level = SizeLevel::build(img, model.sizes[si], si);
    if (!level) continue;
    const std::vector<double> scores = level->score_all(model);
    for (const std::size_t i : level_nms(scores, level->grid_width(), level->grid_height(), params.per_size_keep, offsets)) {
      ScanCandidate c;
      c.size_index = si;
      c.x = static_cast<int>(i % level->grid_width());
      c.y = static_cast<int>(i / level->grid_width());
      c.raw = scores[i];
      c.calibrated = calibrate(model, si, c.raw);
      c.box = clip_box(level->box_at(c.x, c.y), img.width(), img.height());
      all.push_back(c);
    }
  }
  std::stable_sort(all.begin(), all.end(),
                   [](const ScanCandidate& a, const ScanCandidate& b) { return a.calibrated > b.calibrated; });
  if (params.total_keep >= 0 && all.size() > static_cast<std::size_t>(params.total_keep)) {
    all.resize(static_cast<std::size_t>(params.total_keep));
  }
  return all;
}

std::vector<Proposal> scan(const GrayImage& img, const BinarizedModel& model, const ScanParams& params) {
  const auto candidates = scan_candidates(img, model, params);
  std::vector<Proposal> out;
  out.reserve(candidates.size());
  for (const ScanCandidate& c : candidates) out.push_back({c.box, c.calibrated, ProposalSource::kBing});
  return out;
}

}  // namespace bingpp
