#include "bingpp/raster.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "bingpp/error.hpp"
#ifdef BINGPP_HAVE_CODECS
#include "codecs.hpp"
#endif

namespace bingpp {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kUnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::kCorruptPayload: return "CorruptPayload";
    case ErrorCode::kZeroDimension: return "ZeroDimension";
    case ErrorCode::kEmptyIntersection: return "EmptyIntersection";
    case ErrorCode::kNoPositives: return "NoPositives";
    case ErrorCode::kMalformedModelFile: return "MalformedModelFile";
    case ErrorCode::kEmptyEdgeMap: return "EmptyEdgeMap";
    case ErrorCode::kEmptyDataset: return "EmptyDataset";
    case ErrorCode::kMalformedAnnotation: return "MalformedAnnotation";
    case ErrorCode::kNoGroundTruth: return "NoGroundTruth";
    case ErrorCode::kModelMissing: return "ModelMissing";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

namespace {

void check_dims(int width, int height) {
  if (width < 1 || height < 1) {
    throw Error(ErrorCode::kZeroDimension,
                "image dimensions must be positive, got " + std::to_string(width) + "x" +
                    std::to_string(height));
  }
}

// Round half up and saturate; cheaper than std::lround in per-pixel loops.
inline std::uint8_t clamp_byte(double v) {
  if (!(v > 0)) return 0;
  if (v >= 255) return 255;
  return static_cast<std::uint8_t>(v + 0.5);
}

// Minimal tokenizer for the netpbm text header.
class PnmHeaderReader {
 public:
  explicit PnmHeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  long next_int() {
    skip_space_and_comments();
    if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_])) {
      throw Error(ErrorCode::kCorruptPayload, "truncated or malformed netpbm header");
    }
    long v = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_++] - '0');
      if (v > (1L << 24)) throw Error(ErrorCode::kCorruptPayload, "netpbm header value too large");
    }
    return v;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t raster_offset() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
      throw Error(ErrorCode::kCorruptPayload, "missing separator before raster data");
    }
    return pos_ + 1;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 2;
};

template <class Image>
Image resize_impl(const Image& img, int new_width, int new_height, int channels) {
  check_dims(new_width, new_height);
  const int sw = img.width();
  const int sh = img.height();
  if (sw == new_width && sh == new_height) return img;

  // Precompute the two taps and the weight per output column / row.
  struct Tap {
    int i0, i1;
    double w1;
  };
  auto taps = [](int src, int dst) {
    std::vector<Tap> out(dst);
    const double scale = static_cast<double>(src) / dst;
    for (int d = 0; d < dst; ++d) {
      double s = (d + 0.5) * scale - 0.5;
      s = std::clamp(s, 0.0, static_cast<double>(src - 1));
      const int i0 = static_cast<int>(std::floor(s));
      const int i1 = std::min(i0 + 1, src - 1);
      out[d] = {i0, i1, s - i0};
    }
    return out;
  };
  const std::vector<Tap> xt = taps(sw, new_width);
  const std::vector<Tap> yt = taps(sh, new_height);

  std::vector<std::uint8_t> out(static_cast<std::size_t>(new_width) * new_height * channels);
  const auto src = img.data();
  for (int y = 0; y < new_height; ++y) {
    const Tap& ty = yt[y];
    const std::size_t r0 = static_cast<std::size_t>(ty.i0) * sw * channels;
    const std::size_t r1 = static_cast<std::size_t>(ty.i1) * sw * channels;
    for (int x = 0; x < new_width; ++x) {
      const Tap& tx = xt[x];
      for (int c = 0; c < channels; ++c) {
        const double a = src[r0 + tx.i0 * channels + c];
        const double b = src[r0 + tx.i1 * channels + c];
        const double d = src[r1 + tx.i0 * channels + c];
        const double e = src[r1 + tx.i1 * channels + c];
        const double top = a + (b - a) * tx.w1;
        const double bottom = d + (e - d) * tx.w1;
        out[(static_cast<std::size_t>(y) * new_width + x) * channels + c] =
            clamp_byte(top + (bottom - top) * ty.w1);
      }
    }
  }
  return Image(new_width, new_height, std::move(out));
}

}  // namespace

GrayImage::GrayImage(int width, int height, std::uint8_t fill)
    : width_(width), height_(height) {
  check_dims(width, height);
  data_.assign(static_cast<std::size_t>(width) * height, fill);
}

GrayImage::GrayImage(int width, int height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
  check_dims(width, height);
  if (data_.size() != static_cast<std::size_t>(width) * height) {
    throw Error(ErrorCode::kInvalidArgument, "gray data length does not match dimensions");
  }
}

ColorImage::ColorImage(int width, int height, Rgb fill) : width_(width), height_(height) {
  check_dims(width, height);
  data_.resize(3 * static_cast<std::size_t>(width) * height);
  for (std::size_t i = 0; i < data_.size(); i += 3) {
    data_[i] = fill.r;
    data_[i + 1] = fill.g;
    data_[i + 2] = fill.b;
  }
}

ColorImage::ColorImage(int width, int height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
  check_dims(width, height);
  if (data_.size() != 3 * static_cast<std::size_t>(width) * height) {
    throw Error(ErrorCode::kInvalidArgument, "color data length does not match dimensions");
  }
}

std::size_t EdgeMap::count() const {
  return static_cast<std::size_t>(std::count_if(mask.begin(), mask.end(), [](std::uint8_t m) { return m != 0; }));
}

bool has_compressed_decoders() noexcept {
#ifdef BINGPP_HAVE_CODECS
  return true;
#else
  return false;
#endif
}

ColorImage decode_image(std::span<const std::uint8_t> bytes) {
#ifdef BINGPP_HAVE_CODECS
  if (detail::is_png(bytes)) return detail::decode_png(bytes);
  if (detail::is_jpeg(bytes)) return detail::decode_jpeg(bytes);
#endif
  if (bytes.size() < 2 || bytes[0] != 'P') {
    throw Error(ErrorCode::kUnsupportedFormat, "not a binary netpbm payload");
  }
  const char kind = static_cast<char>(bytes[1]);
  if (kind != '5' && kind != '6') {
    throw Error(ErrorCode::kUnsupportedFormat, std::string("netpbm variant P") + kind + " not supported");
  }
  PnmHeaderReader header(bytes);
  const long width = header.next_int();
  const long height = header.next_int();
  const long maxval = header.next_int();
  if (width < 1 || height < 1) throw Error(ErrorCode::kCorruptPayload, "non-positive netpbm dimensions");
  if (maxval < 1 || maxval > 255) {
    throw Error(ErrorCode::kUnsupportedFormat, "only 8-bit netpbm (maxval <= 255) is supported");
  }
  const std::size_t offset = header.raster_offset();
  const std::size_t channels = kind == '6' ? 3 : 1;
  const std::size_t need = static_cast<std::size_t>(width) * height * channels;
  if (bytes.size() - offset < need) {
    throw Error(ErrorCode::kCorruptPayload, "raster data truncated");
  }
  const auto raster = bytes.subspan(offset, need);
  if (channels == 3) {
    return ColorImage(static_cast<int>(width), static_cast<int>(height),
                      std::vector<std::uint8_t>(raster.begin(), raster.end()));
  }
  std::vector<std::uint8_t> rgb(need * 3);
  for (std::size_t i = 0; i < need; ++i) rgb[3 * i] = rgb[3 * i + 1] = rgb[3 * i + 2] = raster[i];
  return ColorImage(static_cast<int>(width), static_cast<int>(height), std::move(rgb));
}

std::vector<std::uint8_t> encode_ppm(const ColorImage& img) {
  const std::string header =
      "P6\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.data().begin(), img.data().end());
  return out;
}

std::vector<std::uint8_t> encode_pgm(const GrayImage& img) {
  const std::string header =
      "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.data().begin(), img.data().end());
  return out;
}

ColorImage read_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_image(bytes);
}

void write_ppm(const std::string& path, const ColorImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  const auto bytes = encode_ppm(img);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "short write to " + path);
}

GrayImage to_gray(const ColorImage& img) {
  GrayImage out(img.width(), img.height());
  const auto src = img.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    // Exact integer form of round(0.299 R + 0.587 G + 0.114 B).
    dst[i] = static_cast<std::uint8_t>((299 * src[3 * i] + 587 * src[3 * i + 1] + 114 * src[3 * i + 2] + 500) / 1000);
  }
  return out;
}

GrayImage resize(const GrayImage& img, int new_width, int new_height) {
  return resize_impl(img, new_width, new_height, 1);
}

ColorImage resize(const ColorImage& img, int new_width, int new_height) {
  return resize_impl(img, new_width, new_height, 3);
}

GradientMap gradients(const GrayImage& img) {
  const int w = img.width();
  const int h = img.height();
  GradientMap g;
  g.width = w;
  g.height = h;
  const std::size_t n = static_cast<std::size_t>(w) * h;
  g.gx.assign(n, 0);
  g.gy.assign(n, 0);
  g.mag.assign(n, 0);

  auto px = [&](int x, int y) { return static_cast<int>(img.at(x, y)); };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int dx = 0;
      if (w > 1) {
        if (x == 0) dx = 2 * (px(1, y) - px(0, y));
        else if (x == w - 1) dx = 2 * (px(w - 1, y) - px(w - 2, y));
        else dx = px(x + 1, y) - px(x - 1, y);
      }
      int dy = 0;
      if (h > 1) {
        if (y == 0) dy = 2 * (px(x, 1) - px(x, 0));
        else if (y == h - 1) dy = 2 * (px(x, h - 1) - px(x, h - 2));
        else dy = px(x, y + 1) - px(x, y - 1);
      }
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      g.gx[i] = static_cast<std::int16_t>(dx);
      g.gy[i] = static_cast<std::int16_t>(dy);
      g.mag[i] = static_cast<std::uint8_t>(std::min(std::abs(dx) + std::abs(dy), 255));
    }
  }
  return g;
}

}  // namespace bingpp
