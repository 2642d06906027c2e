#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <tuple>

#include "bingpp/bing.hpp"
#include "bingpp/error.hpp"

namespace bingpp {

namespace {

struct Sample {
  std::size_t size_index;
  NGFeature feature;
  int label;  // +1 / -1
};

double max_iou(const Box& b, const std::vector<Box>& objects) {
  double best = 0;
  for (const Box& o : objects) best = std::max(best, iou(b, o));
  return best;
}

// Uniform index in [0, n) that does not depend on the standard library's
// distribution implementation.
std::size_t draw(std::mt19937_64& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

void collect_samples(const TrainingImage& item, const TrainParams& params, std::mt19937_64& rng,
                     std::vector<Sample>& out) {
  std::vector<SizeLevel> levels;
  for (std::size_t si = 0; si < params.sizes.size(); ++si) {
    if (auto level = SizeLevel::build(item.image, params.sizes[si], si)) levels.push_back(std::move(*level));
  }
  if (levels.empty()) return;

  // Positives: grid windows next to each object at every size.
  std::set<std::tuple<std::size_t, int, int>> seen;
  for (const Box& obj : item.objects) {
    for (const SizeLevel& level : levels) {
      const Box unit = level.box_at(0, 0);
      const double sx = unit.width() / kFeatureSide;
      const double sy = unit.height() / kFeatureSide;
      const int cx = static_cast<int>(std::lround(obj.x1 / sx));
      const int cy = static_cast<int>(std::lround(obj.y1 / sy));
      for (int y = cy - 1; y <= cy + 1; ++y) {
        for (int x = cx - 1; x <= cx + 1; ++x) {
          if (x < 0 || y < 0 || x >= level.grid_width() || y >= level.grid_height()) continue;
          if (iou(level.box_at(x, y), obj) < params.eta) continue;
          if (!seen.emplace(level.size_index(), x, y).second) continue;
          out.push_back({level.size_index(), level.feature_at(x, y), +1});
        }
      }
    }
  }

  // Negatives: random windows clear of every object. A window that already
  // meets the positive threshold is never labelled negative.
  const double neg_limit = std::min(0.25, params.eta);
  int drawn = 0;
  for (int attempt = 0; attempt < 4 * params.negatives_per_image && drawn < params.negatives_per_image; ++attempt) {
    const SizeLevel& level = levels[draw(rng, levels.size())];
    const int x = static_cast<int>(draw(rng, static_cast<std::size_t>(level.grid_width())));
    const int y = static_cast<int>(draw(rng, static_cast<std::size_t>(level.grid_height())));
    if (max_iou(level.box_at(x, y), item.objects) >= neg_limit) continue;
    out.push_back({level.size_index(), level.feature_at(x, y), -1});
    ++drawn;
  }
}

// Pegasos: hinge loss with L2 regularisation, step 1 / (lambda t). Features
// are scaled to [0, 1] for conditioning.
Filter train_svm(const std::vector<Sample>& samples, const TrainParams& params, std::mt19937_64& rng) {
  Filter w{};
  std::vector<std::size_t> order(samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::size_t t = 0;
  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[draw(rng, i)]);
    for (const std::size_t idx : order) {
      ++t;
      const Sample& s = samples[idx];
      const double step = 1.0 / (params.lambda * static_cast<double>(t));
      double margin = 0;
      for (int i = 0; i < kFeatureDim; ++i) margin += w[i] * s.feature[i] / 255.0;
      margin *= s.label;
      const double shrink = 1.0 - step * params.lambda;
      for (int i = 0; i < kFeatureDim; ++i) {
        w[i] *= shrink;
        if (margin < 1.0) w[i] += step * s.label * s.feature[i] / 255.0;
      }
    }
  }
  for (double& v : w) v /= 255.0;  // consume raw byte features
  return w;
}

Calibration fit_calibration(const std::vector<std::pair<double, int>>& pts) {
  const std::size_t n = pts.size();
  if (n < 2) return {};
  bool has_pos = false, has_neg = false;
  double ms = 0, my = 0;
  for (const auto& [s, y] : pts) {
    ms += s;
    my += y;
    (y > 0 ? has_pos : has_neg) = true;
  }
  if (!has_pos || !has_neg) return {};
  ms /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (const auto& [s, y] : pts) {
    sxx += (s - ms) * (s - ms);
    sxy += (s - ms) * (y - my);
  }
  if (!(sxx > 1e-12 * (1.0 + ms * ms) * n)) return {};
  const double v = sxy / sxx;
  return {v, my - v * ms};
}

}  // namespace

BinarizedModel train_simple(std::span<const TrainingImage> data, const TrainParams& params, TrainReport* report) {
  if (params.sizes.empty()) throw Error(ErrorCode::kInvalidArgument, "no window sizes to train");
  std::mt19937_64 rng(params.seed);
  std::vector<Sample> samples;
  for (const TrainingImage& item : data) collect_samples(item, params, rng, samples);

  const std::size_t positives = static_cast<std::size_t>(
      std::count_if(samples.begin(), samples.end(), [](const Sample& s) { return s.label > 0; }));
  if (positives == 0) throw Error(ErrorCode::kNoPositives, "no training window reaches the overlap threshold");

  Filter w = train_svm(samples, params, rng);

  BinarizedModel full;
  full.w = w;
  full.basis = binarize_filter(w, params.n_w);
  full.n_g = params.n_g;

  std::vector<std::vector<std::pair<double, int>>> per_size(params.sizes.size());
  std::vector<bool> has_positive(params.sizes.size(), false);
  for (const Sample& s : samples) {
    per_size[s.size_index].emplace_back(score_exact(full, s.feature), s.label);
    if (s.label > 0) has_positive[s.size_index] = true;
  }

  BinarizedModel model = full;
  std::vector<std::size_t> kept_index(params.sizes.size(), static_cast<std::size_t>(-1));
  for (std::size_t si = 0; si < params.sizes.size(); ++si) {
    if (!has_positive[si]) continue;
    kept_index[si] = model.sizes.size();
    model.sizes.push_back(params.sizes[si]);
    model.calib.push_back(fit_calibration(per_size[si]));
  }
  model.validate();

  if (report) {
    std::size_t correct = 0, counted = 0;
    for (const Sample& s : samples) {
      if (kept_index[s.size_index] == static_cast<std::size_t>(-1)) continue;
      const double c = calibrate(model, kept_index[s.size_index], score_exact(model, s.feature));
      correct += (c > 0) == (s.label > 0);
      ++counted;
    }
    report->positives = positives;
    report->negatives = samples.size() - positives;
    report->dropped_sizes = params.sizes.size() - model.sizes.size();
    report->training_accuracy = counted ? static_cast<double>(correct) / counted : 0.0;
  }
  return model;
}

}  // namespace bingpp
