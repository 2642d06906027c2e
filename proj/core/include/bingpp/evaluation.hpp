#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bingpp/geometry.hpp"
#include "bingpp/raster.hpp"

namespace bingpp {

struct GroundTruth {
  std::string image_id;
  std::string class_name;
  Box box;
  bool difficult = false;

  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

/// Proposals keyed by image id, each list in the order it was produced.
using ProposalsByImage = std::map<std::string, std::vector<Proposal>>;

/// One GroundTruth per <object>. Inclusive integer VOC corners become the
/// continuous box (xmin, ymin, xmax + 1, ymax + 1). The image id is the
/// <filename> stem, or fallback_image_id when the file has none.
/// Throws Error{kMalformedAnnotation}.
std::vector<GroundTruth> parse_voc_xml(std::string_view xml, const std::string& fallback_image_id = "");

/// One object per line: {"image": ..., "class": ..., "box": [x1, y1, x2, y2]}
/// with an optional "difficult" flag. Blank lines are skipped.
/// Throws Error{kMalformedAnnotation}.
std::vector<GroundTruth> parse_gt_jsonl(std::string_view text);
std::string to_gt_jsonl(std::span<const GroundTruth> gts);

/// A .jsonl file, a single VOC .xml file, or a directory of VOC .xml files.
std::vector<GroundTruth> load_ground_truth(const std::string& path);

/// The first k proposals by descending score; equal scores keep input order.
std::vector<Proposal> top_k(std::span<const Proposal> props, std::size_t k);

/// Max IoU of the object against the given proposals, 0 when there are none.
double best_overlap(const GroundTruth& gt, std::span<const Proposal> props) noexcept;

/// Best overlap of every ground truth against the top-k proposals of its image.
std::vector<double> best_overlaps(std::span<const GroundTruth> gts, const ProposalsByImage& props, std::size_t k);

/// Fraction of ground truths whose best overlap (top-k) reaches eta.
double detection_recall(std::span<const GroundTruth> gts, const ProposalsByImage& props, double eta, std::size_t k);

struct AboMabo {
  std::map<std::string, double> abo;
  double mabo = 0;
};

/// Per-class mean best overlap and their unweighted mean. Throws
/// Error{kNoGroundTruth}.
AboMabo abo_mabo(std::span<const GroundTruth> gts, const ProposalsByImage& props, std::size_t k);

/// (eta, recall) per grid point; the grid must be ascending.
std::vector<std::pair<double, double>> recall_overlap_curve(std::span<const GroundTruth> gts,
                                                            const ProposalsByImage& props, std::size_t k,
                                                            std::span<const double> eta_grid);

struct EvalParams {
  std::vector<double> etas{0.5, 0.7};
  std::vector<std::size_t> budgets{1, 10, 100, 1000};
  std::size_t abo_budget = 1000;
  std::vector<double> curve_grid = default_curve_grid();
  bool include_difficult = true;

  static std::vector<double> default_curve_grid();
};

struct DrEntry {
  double eta = 0;
  std::size_t budget = 0;
  double dr = 0;
};

struct MetricsReport {
  std::vector<DrEntry> dr;
  std::map<std::string, double> abo;
  double mabo = 0;
  std::vector<double> bo;  // per evaluated ground truth, at abo_budget
  std::vector<std::pair<double, double>> curve;
  std::size_t objects = 0;
  std::size_t images = 0;
};

MetricsReport evaluate(std::span<const GroundTruth> gts, const ProposalsByImage& props, const EvalParams& params = {});

/// {"dr": {"<eta>": {"<budget>": value}}, "abo": {class: value}, "mabo": value,
///  "curve": [[eta, recall], ...], "objects": n, "images": n}
std::string report_to_json(const MetricsReport& report);
/// Header eta,recall.
std::string curve_to_csv(const MetricsReport& report);

struct SyntheticScene {
  ColorImage image;
  std::vector<GroundTruth> objects;
};

/// Deterministic scene of pairwise-disjoint, strongly colored rectangles on a
/// low-contrast textured background. Ground truths are the exact rectangles.
SyntheticScene synth_scene(std::uint64_t seed, int n_objects, int width = 640, int height = 480,
                           const std::string& image_id = "synth");

}  // namespace bingpp
