#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "bingpp/error.hpp"
#include "bingpp/raster.hpp"

namespace bingpp {

namespace {

// Gaussian taps in fixed point, summing to exactly 256. Integer smoothing keeps
// the detector exactly invariant to an additive intensity offset.
std::vector<std::int64_t> gaussian_taps(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> g(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    g[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    sum += g[i + radius];
  }
  std::vector<std::int64_t> taps(g.size());
  std::int64_t total = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    taps[i] = std::llround(g[i] * 256.0 / sum);
    total += taps[i];
  }
  taps[radius] += 256 - total;  // absorb rounding in the center tap
  return taps;
}

}  // namespace

EdgeMap canny(const GrayImage& img, const CannyParams& params) {
  if (params.low < 0 || params.high < params.low || params.sigma <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "canny requires 0 <= low <= high and sigma > 0");
  }
  const int w = img.width();
  const int h = img.height();
  const std::size_t n = static_cast<std::size_t>(w) * h;

  const auto taps = gaussian_taps(params.sigma);
  const int radius = static_cast<int>(taps.size() / 2);
  constexpr double kScale = 256.0 * 256.0;  // smoothed = value / kScale

  std::vector<std::int64_t> tmp(n), smooth(n);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::int64_t acc = 0;
      for (int k = -radius; k <= radius; ++k) {
        acc += taps[k + radius] * img.at(std::clamp(x + k, 0, w - 1), y);
      }
      tmp[static_cast<std::size_t>(y) * w + x] = acc;
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::int64_t acc = 0;
      for (int k = -radius; k <= radius; ++k) {
        acc += taps[k + radius] * tmp[static_cast<std::size_t>(std::clamp(y + k, 0, h - 1)) * w + x];
      }
      smooth[static_cast<std::size_t>(y) * w + x] = acc;
    }
  }

  auto s = [&](int x, int y) {
    return smooth[static_cast<std::size_t>(std::clamp(y, 0, h - 1)) * w + std::clamp(x, 0, w - 1)];
  };
  std::vector<std::int64_t> gx(n), gy(n), mag2(n);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::int64_t dx = (s(x + 1, y - 1) + 2 * s(x + 1, y) + s(x + 1, y + 1)) -
                              (s(x - 1, y - 1) + 2 * s(x - 1, y) + s(x - 1, y + 1));
      const std::int64_t dy = (s(x - 1, y + 1) + 2 * s(x, y + 1) + s(x + 1, y + 1)) -
                              (s(x - 1, y - 1) + 2 * s(x, y - 1) + s(x + 1, y - 1));
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      gx[i] = dx;
      gy[i] = dy;
      mag2[i] = dx * dx + dy * dy;
    }
  }

  const double low2 = std::pow(params.low * kScale, 2);
  const double high2 = std::pow(params.high * kScale, 2);
  // tan(22.5deg) and tan(67.5deg) scaled by 2^15 for integer sector tests.
  constexpr std::int64_t kTan22 = 13573;
  constexpr std::int64_t kTan67 = 79109;

  // 0: not an edge, 1: weak candidate, 2: strong
  std::vector<std::uint8_t> state(n, 0);
  auto m = [&](int x, int y) -> std::int64_t {
    if (x < 0 || y < 0 || x >= w || y >= h) return 0;
    return mag2[static_cast<std::size_t>(y) * w + x];
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      const std::int64_t v = mag2[i];
      if (static_cast<double>(v) < low2 || v == 0) continue;
      const std::int64_t ax = std::abs(gx[i]);
      const std::int64_t ay = std::abs(gy[i]);
      int dx1, dy1;
      if (ay * 32768 <= ax * kTan22) {
        dx1 = 1, dy1 = 0;
      } else if (ay * 32768 > ax * kTan67) {
        dx1 = 0, dy1 = 1;
      } else if ((gx[i] > 0) == (gy[i] > 0)) {
        dx1 = 1, dy1 = 1;
      } else {
        dx1 = 1, dy1 = -1;
      }
      // Strict on the backward neighbor, non-strict forward: a symmetric ridge
      // keeps exactly one pixel.
      if (v > m(x - dx1, y - dy1) && v >= m(x + dx1, y + dy1)) {
        state[i] = static_cast<double>(v) >= high2 ? 2 : 1;
      }
    }
  }

  EdgeMap out;
  out.width = w;
  out.height = h;
  out.mask.assign(n, 0);
  std::vector<std::size_t> stack;
  for (std::size_t i = 0; i < n; ++i) {
    if (state[i] == 2 && !out.mask[i]) {
      out.mask[i] = 1;
      stack.push_back(i);
    }
    while (!stack.empty()) {
      const std::size_t c = stack.back();
      stack.pop_back();
      const int cx = static_cast<int>(c % w);
      const int cy = static_cast<int>(c / w);
      for (int oy = -1; oy <= 1; ++oy) {
        for (int ox = -1; ox <= 1; ++ox) {
          const int nx = cx + ox, ny = cy + oy;
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          const std::size_t j = static_cast<std::size_t>(ny) * w + nx;
          if (state[j] != 0 && !out.mask[j]) {
            out.mask[j] = 1;
            stack.push_back(j);
          }
        }
      }
    }
  }
  return out;
}

}  // namespace bingpp
