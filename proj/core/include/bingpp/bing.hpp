#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bingpp/geometry.hpp"
#include "bingpp/raster.hpp"

namespace bingpp {

inline constexpr int kFeatureSide = 8;
inline constexpr int kFeatureDim = kFeatureSide * kFeatureSide;

/// 8x8 normed-gradient window, row-major.
using NGFeature = std::array<std::uint8_t, kFeatureDim>;
using Filter = std::array<double, kFeatureDim>;

/// Bit layout shared by feature planes and basis words: feature element i
/// (row-major) lives in bit 63 - i, so element 0 is the most significant bit.
constexpr std::uint64_t feature_bit(int i) noexcept { return std::uint64_t{1} << (63 - i); }

/// One term beta * a of the binary approximation w ~ sum_j beta_j a_j, with
/// a in {-1, +1}^64 stored as its positive part (bit set where a = +1).
struct BasisVector {
  std::uint64_t a_plus = 0;
  double beta = 0;
  friend bool operator==(const BasisVector&, const BasisVector&) = default;
};

struct WindowSize {
  int width = 0;
  int height = 0;
  friend bool operator==(const WindowSize&, const WindowSize&) = default;
};

/// Per-size affine score calibration c = v * s + t.
struct Calibration {
  double v = 1.0;
  double t = 0.0;
  friend bool operator==(const Calibration&, const Calibration&) = default;
};

struct BinarizedModel {
  Filter w{};
  std::vector<BasisVector> basis;
  int n_g = 4;
  std::vector<WindowSize> sizes;
  std::vector<Calibration> calib;

  /// sum_j beta_j * a_j
  Filter reconstructed() const;
  /// Throws Error{kMalformedModelFile} on inconsistent fields.
  void validate() const;

  friend bool operator==(const BinarizedModel&, const BinarizedModel&) = default;
};

/// All (w, h) with w, h in {16, 32, 64, 128, 256, 512}: 36 sizes.
std::vector<WindowSize> default_window_sizes();

/// Greedy residual fit of n_w sign vectors: a_j = sign(r), beta_j = <r, a_j> / 64,
/// r -= beta_j a_j. Zero residual entries take sign +1.
std::vector<BasisVector> binarize_filter(const Filter& w, int n_w);

/// Builds a model with identity calibration for every size.
BinarizedModel make_model(const Filter& w, int n_w, int n_g, std::vector<WindowSize> sizes);

/// plane[k] holds bit (7 - k) of every feature byte, so plane 0 is the most
/// significant bit plane.
std::array<std::uint64_t, 8> bit_planes(const NGFeature& feat) noexcept;

/// <w, feat> at full precision.
double score_exact(const BinarizedModel& model, const NGFeature& feat) noexcept;

/// sum_j beta_j sum_k 2^(7-k) (2 popcount(a_j & b_k) - popcount(b_k)) over the
/// first model.n_g planes. Only AND and popcount touch the feature.
double score_fast(const BinarizedModel& model, std::span<const std::uint64_t> planes) noexcept;

double calibrate(const BinarizedModel& model, std::size_t size_index, double raw);

/// Area-averaged 8x8 resample of the gradient magnitude inside the window
/// (clipped to the map). Throws Error{kEmptyIntersection}.
NGFeature extract_ng(const GradientMap& grad, const Box& window);
NGFeature extract_ng(const GrayImage& img, const Box& window);

/// The image resampled so that one quantized window size maps onto 8x8
/// cells, with its normed-gradient map.
class SizeLevel {
 public:
  /// std::nullopt when the resampled image is smaller than 8x8.
  static std::optional<SizeLevel> build(const GrayImage& img, WindowSize size, std::size_t size_index);

  std::size_t size_index() const noexcept { return size_index_; }
  int grid_width() const noexcept { return grid_w_; }    // number of x positions
  int grid_height() const noexcept { return grid_h_; }   // number of y positions
  int level_width() const noexcept { return width_; }
  int level_height() const noexcept { return height_; }
  std::span<const std::uint8_t> magnitude() const noexcept { return mag_; }

  NGFeature feature_at(int x, int y) const;
  /// Window at grid position (x, y) in original-image coordinates.
  Box box_at(int x, int y) const noexcept;

  /// Raw fast scores for all grid positions, row-major over (y, x).
  std::vector<double> score_all(const BinarizedModel& model) const;

 private:
  std::size_t size_index_ = 0;
  int width_ = 0, height_ = 0;
  int grid_w_ = 0, grid_h_ = 0;
  double sx_ = 1, sy_ = 1;
  std::vector<std::uint8_t> mag_;
};

struct ScanParams {
  int per_size_keep = 130;
  int total_keep = 1000;
  double per_size_nms = 0.6;
};

struct ScanCandidate {
  std::size_t size_index = 0;
  int x = 0, y = 0;
  double raw = 0;
  double calibrated = 0;
  Box box;
};

/// Every kept window with its provenance, sorted by calibrated score.
std::vector<ScanCandidate> scan_candidates(const GrayImage& img, const BinarizedModel& model,
                                           const ScanParams& params = {});

std::vector<Proposal> scan(const GrayImage& img, const BinarizedModel& model, const ScanParams& params = {});

// -- training ---------------------------------------------------------------

struct TrainingImage {
  GrayImage image;
  std::vector<Box> objects;
};

struct TrainParams {
  double eta = 0.5;
  double lambda = 1e-4;
  int epochs = 10;
  int n_w = 2;
  int n_g = 4;
  int negatives_per_image = 100;
  std::uint64_t seed = 1;
  std::vector<WindowSize> sizes = default_window_sizes();
};

struct TrainReport {
  std::size_t positives = 0;
  std::size_t negatives = 0;
  std::size_t dropped_sizes = 0;
  double training_accuracy = 0;
};

/// Single shared linear filter (hinge loss, Pegasos subgradient steps) plus a
/// per-size least-squares calibration. Sizes that never see a positive window
/// are dropped from the model. Throws Error{kNoPositives}.
BinarizedModel train_simple(std::span<const TrainingImage> data, const TrainParams& params = {},
                            TrainReport* report = nullptr);

// -- persistence ------------------------------------------------------------

std::string model_to_json(const BinarizedModel& model);
/// Throws Error{kMalformedModelFile}.
BinarizedModel model_from_json(const std::string& text);
BinarizedModel read_model(const std::string& path);
void write_model(const std::string& path, const BinarizedModel& model);

}  // namespace bingpp
