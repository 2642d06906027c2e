#include <algorithm>
#include <random>

#include "bingpp/error.hpp"
#include "bingpp/evaluation.hpp"

namespace bingpp {

namespace {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  // Uniform in [lo, hi].
  int uniform(int lo, int hi) { return lo + static_cast<int>(gen_() % static_cast<std::uint64_t>(hi - lo + 1)); }

 private:
  std::mt19937_64 gen_;
};

std::uint8_t clamp_u8(int v) { return static_cast<std::uint8_t>(std::clamp(v, 0, 255)); }

int luma(const Rgb& c) { return (299 * c.r + 587 * c.g + 114 * c.b + 500) / 1000; }

// Saturated color whose luma sits far from the background level.
Rgb object_color(Rng& rng) {
  for (;;) {
    Rgb c{clamp_u8(rng.uniform(0, 255)), clamp_u8(rng.uniform(0, 255)), clamp_u8(rng.uniform(0, 255))};
    const int hi = std::max({c.r, c.g, c.b});
    const int lo = std::min({c.r, c.g, c.b});
    const int y = luma(c);
    if (hi - lo >= 120 && (y < 60 || y > 190)) return c;
  }
}

bool separated(const Box& a, const Box& b, double margin) {
  return a.x2 + margin <= b.x1 || b.x2 + margin <= a.x1 || a.y2 + margin <= b.y1 || b.y2 + margin <= a.y1;
}

}  // namespace

SyntheticScene synth_scene(std::uint64_t seed, int n_objects, int width, int height, const std::string& image_id) {
  if (width < 64 || height < 64) throw Error(ErrorCode::kZeroDimension, "synthetic scenes need at least 64x64 pixels");
  if (n_objects < 0) throw Error(ErrorCode::kInvalidArgument, "object count must be non-negative");
  Rng rng(seed);

  SyntheticScene scene;
  scene.image = ColorImage(width, height);
  // Muted background: a gentle blocky texture plus per-pixel noise.
  const int base = rng.uniform(110, 140);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const int tex = ((x / 24 + y / 24) % 2) * 4;
      const int v = base + tex + rng.uniform(-5, 5);
      scene.image.set(x, y, {clamp_u8(v + 4), clamp_u8(v), clamp_u8(v - 4)});
    }
  }

  const int min_side = std::max(16, std::min(width, height) / 12);
  const int max_w = std::max(min_side, width * 2 / 5);
  const int max_h = std::max(min_side, height * 2 / 5);
  constexpr double kMargin = 16;
  std::vector<Box> placed;
  for (int attempts = 0; static_cast<int>(placed.size()) < n_objects && attempts < 20000; ++attempts) {
    // Shrink the size range as attempts pile up so crowded scenes still fill.
    const int shrink = 1 + attempts / 2000;
    const int w = rng.uniform(min_side, std::max(min_side, max_w / shrink));
    const int h = rng.uniform(min_side, std::max(min_side, max_h / shrink));
    if (w + 8 > width || h + 8 > height) continue;
    const int x = rng.uniform(4, width - w - 4);
    const int y = rng.uniform(4, height - h - 4);
    const Box b{static_cast<double>(x), static_cast<double>(y), static_cast<double>(x + w), static_cast<double>(y + h)};
    if (std::all_of(placed.begin(), placed.end(), [&](const Box& o) { return separated(b, o, kMargin); })) {
      placed.push_back(b);
    }
  }
  if (static_cast<int>(placed.size()) < n_objects) {
    throw Error(ErrorCode::kInvalidArgument, "could not place the requested number of objects");
  }

  for (const Box& b : placed) {
    const Rgb c = object_color(rng);
    for (int y = static_cast<int>(b.y1); y < static_cast<int>(b.y2); ++y) {
      for (int x = static_cast<int>(b.x1); x < static_cast<int>(b.x2); ++x) {
        const int n = rng.uniform(-3, 3);
        scene.image.set(x, y, {clamp_u8(c.r + n), clamp_u8(c.g + n), clamp_u8(c.b + n)});
      }
    }
    scene.objects.push_back({image_id, "rect", b, false});
  }
  return scene;
}

}  // namespace bingpp
