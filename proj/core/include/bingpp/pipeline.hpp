#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "bingpp/bing.hpp"
#include "bingpp/edge_refine.hpp"
#include "bingpp/evaluation.hpp"
#include "bingpp/raster.hpp"
#include "bingpp/segment_refine.hpp"

namespace bingpp {

struct PipelineConfig {
  std::string model_path;
  int max_proposals = 1000;
  ScanParams scan;
  EdgeRefineParams edge;
  CannyParams canny;
  SegRefineParams seg;
  double nms_rho = 0.85;
  bool enable_edge = true;
  bool enable_seg = true;
  bool seg_first = false;  // run the segment stage before the edge stage
  double eval_eta = 0.5;
  int threads = 1;
  std::uint64_t seed = 1;

  /// Throws Error{kInvalidArgument}.
  void validate() const;
};

/// JSON layout documented in README.md. Missing keys keep their defaults;
/// "gamma" accepts a number or an array. Throws Error{kInvalidArgument}.
PipelineConfig config_from_json(const std::string& text);
std::string config_to_json(const PipelineConfig& cfg);
PipelineConfig read_config(const std::string& path);

/// Wall-clock milliseconds per stage.
struct StageTimings {
  double bing = 0;
  double edge = 0;         // resize, Canny, distance transform, box updates
  double segmentation = 0; // cell grid and graph segmentation
  double seg_refine = 0;   // box expansion
  double nms = 0;
  double total = 0;
};

struct PipelineResult {
  std::vector<Proposal> proposals;  // original image coordinates, score descending
  StageTimings timings;
  EdgeRefineStats edge_stats;
  std::size_t scanned = 0;          // proposals entering refinement
  std::vector<std::string> warnings;
};

/// BING scan, edge refinement, segment expansion, then NMS and truncation.
/// A stage that fails passes its input through and records a warning.
PipelineResult run_bingpp(const ColorImage& img, const BinarizedModel& model, const PipelineConfig& cfg);

/// Refinement stages only, starting from the given proposals.
PipelineResult refine_proposals(const ColorImage& img, std::vector<Proposal> props, const PipelineConfig& cfg);

struct NamedImage {
  std::string id;
  ColorImage image;
};

/// Runs run_bingpp over the images on up to `threads` workers. Results come
/// back in input order regardless of scheduling.
std::vector<PipelineResult> run_batch(std::span<const NamedImage> images, const BinarizedModel& model,
                                      const PipelineConfig& cfg, int threads);

/// Calls fn(i) for i in [0, n) on up to `threads` workers.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

struct LearnedParameters {
  GammaLearningResult gamma;
  DeltaLearningResult delta;
};

/// Learns the edge-stage gamma sequence (cfg.edge.max_iters entries), then the
/// delta set on the boxes produced by the learned edge stage. Proposals come
/// from run_bingpp's scan; ground truths are matched to images by id.
/// Throws Error{kEmptyDataset}.
LearnedParameters learn_parameters(std::span<const NamedImage> images, std::span<const GroundTruth> gts,
                                   const BinarizedModel& model, const PipelineConfig& cfg);

/// Header image_id,x1,y1,x2,y2,score; rows grouped by image in the given
/// order, score descending inside each image.
std::string proposals_csv(std::span<const std::string> image_ids, std::span<const std::vector<Proposal>> props);
/// Throws Error{kCorruptPayload}.
ProposalsByImage parse_proposals_csv(const std::string& text);

}  // namespace bingpp
