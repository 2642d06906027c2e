#include <algorithm>
#include <cmath>
#include <map>

#include "bingpp/error.hpp"
#include "bingpp/pipeline.hpp"

namespace bingpp {

namespace {

struct PreparedImage {
  const ColorImage* image = nullptr;
  std::vector<Proposal> proposals;
  std::vector<GroundTruth> objects;
  double sx = 1, sy = 1;  // original -> edge frame
  NearestEdgeMap nmap;
  bool has_edges = false;
};

std::vector<Box> boxes_of(std::span<const Proposal> props, double sx, double sy) {
  std::vector<Box> out;
  out.reserve(props.size());
  for (const Proposal& p : props) out.push_back(scale_box(p.box, sx, sy));
  return out;
}

}  // namespace

LearnedParameters learn_parameters(std::span<const NamedImage> images, std::span<const GroundTruth> gts,
                                   const BinarizedModel& model, const PipelineConfig& cfg) {
  cfg.validate();
  std::map<std::string, std::vector<GroundTruth>> by_image;
  for (const GroundTruth& gt : gts) by_image[gt.image_id].push_back(gt);

  std::vector<PreparedImage> prepared;
  for (const NamedImage& img : images) {
    const auto it = by_image.find(img.id);
    if (it == by_image.end() || img.image.empty()) continue;
    PreparedImage p;
    p.image = &img.image;
    p.objects = it->second;
    const GrayImage gray = to_gray(img.image);
    p.proposals = scan(gray, model, cfg.scan);
    const int w = std::max(1, static_cast<int>(std::lround(gray.width() * cfg.edge.resize_factor)));
    const int h = std::max(1, static_cast<int>(std::lround(gray.height() * cfg.edge.resize_factor)));
    p.sx = static_cast<double>(w) / gray.width();
    p.sy = static_cast<double>(h) / gray.height();
    try {
      p.nmap = distance_transform(canny(resize(gray, w, h), cfg.canny));
      p.has_edges = true;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kEmptyEdgeMap) throw;
    }
    prepared.push_back(std::move(p));
  }
  if (prepared.empty()) throw Error(ErrorCode::kEmptyDataset, "no image has both pixels and ground truth");

  std::vector<EdgeLearningSample> edge_samples;
  for (const PreparedImage& p : prepared) {
    if (!p.has_edges) continue;
    EdgeLearningSample s;
    s.nmap = p.nmap;
    s.proposals = boxes_of(p.proposals, p.sx, p.sy);
    for (const GroundTruth& gt : p.objects) s.objects.push_back(scale_box(gt.box, p.sx, p.sy));
    edge_samples.push_back(std::move(s));
  }
  if (edge_samples.empty()) throw Error(ErrorCode::kEmptyDataset, "no training image has edges");

  LearnedParameters out;
  out.gamma = learn_gamma(edge_samples, cfg.eval_eta, cfg.edge.max_iters);

  EdgeRefineParams learned_edge = cfg.edge;
  learned_edge.gamma = out.gamma.gamma;
  std::vector<SegLearningSample> seg_samples;
  for (const PreparedImage& p : prepared) {
    std::vector<Proposal> props = p.proposals;
    if (cfg.enable_edge && p.has_edges) {
      std::vector<Proposal> small = props;
      for (Proposal& q : small) q.box = scale_box(q.box, p.sx, p.sy);
      const auto refined = edge_recursive_box(p.nmap, small, learned_edge);
      for (std::size_t i = 0; i < props.size(); ++i) {
        if (refined[i].source == ProposalSource::kEdgeRefined) {
          props[i].box = scale_box(refined[i].box, 1.0 / p.sx, 1.0 / p.sy);
        }
      }
    }
    const CellGrid grid = build_cell_grid(*p.image, cfg.seg);
    SegLearningSample s;
    s.labeling = segment_graph(grid, cfg.seg.k, cfg.seg.min_size);
    const double cx = static_cast<double>(grid.grid_w) / p.image->width();
    const double cy = static_cast<double>(grid.grid_h) / p.image->height();
    s.proposals = boxes_of(props, cx, cy);
    for (const GroundTruth& gt : p.objects) {
      s.objects.push_back(scale_box(gt.box, cx, cy));
      s.classes.push_back(gt.class_name);
    }
    seg_samples.push_back(std::move(s));
  }
  out.delta = learn_delta(seg_samples, cfg.eval_eta);
  return out;
}

}  // namespace bingpp
