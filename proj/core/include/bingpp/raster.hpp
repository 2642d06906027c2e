#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace bingpp {

/// 8-bit single channel image, row-major.
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(int width, int height, std::uint8_t fill = 0);
  GrayImage(int width, int height, std::vector<std::uint8_t> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return data_.empty(); }

  std::uint8_t at(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  std::uint8_t& at(int x, int y) { return data_[static_cast<std::size_t>(y) * width_ + x]; }

  std::span<const std::uint8_t> data() const noexcept { return data_; }
  std::span<std::uint8_t> data() noexcept { return data_; }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// 8-bit interleaved RGB image, row-major.
class ColorImage {
 public:
  ColorImage() = default;
  ColorImage(int width, int height, Rgb fill = {});
  ColorImage(int width, int height, std::vector<std::uint8_t> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return data_.empty(); }

  Rgb at(int x, int y) const {
    const std::size_t i = 3 * (static_cast<std::size_t>(y) * width_ + x);
    return {data_[i], data_[i + 1], data_[i + 2]};
  }
  void set(int x, int y, Rgb c) {
    const std::size_t i = 3 * (static_cast<std::size_t>(y) * width_ + x);
    data_[i] = c.r;
    data_[i + 1] = c.g;
    data_[i + 2] = c.b;
  }

  std::span<const std::uint8_t> data() const noexcept { return data_; }
  std::span<std::uint8_t> data() noexcept { return data_; }

  friend bool operator==(const ColorImage&, const ColorImage&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Signed central differences plus the clamped L1 magnitude.
///
/// Interior pixels use I(x+1) - I(x-1); border pixels use the one-sided
/// difference doubled, so both share the same (two-pixel) scale. The
/// magnitude is min(|gx| + |gy|, 255), stored as a byte.
struct GradientMap {
  int width = 0;
  int height = 0;
  std::vector<std::int16_t> gx;
  std::vector<std::int16_t> gy;
  std::vector<std::uint8_t> mag;

  std::uint8_t mag_at(int x, int y) const { return mag[static_cast<std::size_t>(y) * width + x]; }
};

struct EdgeMap {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> mask;  // 1 at edge pixels

  bool at(int x, int y) const { return mask[static_cast<std::size_t>(y) * width + x] != 0; }
  std::size_t count() const;
};

struct CannyParams {
  double sigma = 1.0;
  double low = 50.0;
  double high = 100.0;
};

/// True when the library was built with the PNG and JPEG decoders.
bool has_compressed_decoders() noexcept;

/// Decodes binary PPM (P6) or PGM (P5), plus PNG and JPEG when
/// has_compressed_decoders(). Gray input is replicated into all three
/// channels; PNG alpha is composited onto black.
/// Throws Error{kUnsupportedFormat | kCorruptPayload}.
ColorImage decode_image(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_ppm(const ColorImage& img);
std::vector<std::uint8_t> encode_pgm(const GrayImage& img);

ColorImage read_image(const std::string& path);
void write_ppm(const std::string& path, const ColorImage& img);

/// ITU-R 601 luma, rounded.
GrayImage to_gray(const ColorImage& img);

/// Bilinear resize on the half-pixel-center grid:
/// src = (dst + 0.5) * src_size / dst_size - 0.5, clamped to the border.
GrayImage resize(const GrayImage& img, int new_width, int new_height);
ColorImage resize(const ColorImage& img, int new_width, int new_height);

GradientMap gradients(const GrayImage& img);

EdgeMap canny(const GrayImage& img, const CannyParams& params = {});

}  // namespace bingpp
