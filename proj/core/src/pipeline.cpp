#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <sstream>
#include <thread>

#include "bingpp/error.hpp"
#include "bingpp/pipeline.hpp"

namespace bingpp {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::vector<Proposal> scaled(std::span<const Proposal> props, double sx, double sy) {
  std::vector<Proposal> out(props.begin(), props.end());
  for (Proposal& p : out) p.box = scale_box(p.box, sx, sy);
  return out;
}

std::vector<Proposal> edge_stage(const ColorImage& img, const GrayImage* gray, std::vector<Proposal> props,
                                 const PipelineConfig& cfg, PipelineResult& result) {
  const auto start = Clock::now();
  try {
    const int w = std::max(1, static_cast<int>(std::lround(img.width() * cfg.edge.resize_factor)));
    const int h = std::max(1, static_cast<int>(std::lround(img.height() * cfg.edge.resize_factor)));
    const GrayImage small = gray ? resize(*gray, w, h) : resize(to_gray(img), w, h);
    const NearestEdgeMap nmap = distance_transform(canny(small, cfg.canny));
    const double sx = static_cast<double>(w) / img.width();
    const double sy = static_cast<double>(h) / img.height();
    auto refined = edge_recursive_box(nmap, scaled(props, sx, sy), cfg.edge, &result.edge_stats);
    for (std::size_t i = 0; i < refined.size(); ++i) {
      // Pass-through boxes keep their exact original coordinates.
      if (refined[i].source == ProposalSource::kEdgeRefined) {
        refined[i].box = scale_box(refined[i].box, 1.0 / sx, 1.0 / sy);
      } else {
        refined[i].box = props[i].box;
      }
    }
    props = std::move(refined);
  } catch (const Error& e) {
    result.warnings.push_back(std::string("edge stage skipped: ") + e.what());
  }
  result.timings.edge += ms_since(start);
  return props;
}

std::vector<Proposal> seg_stage(const ColorImage& img, std::vector<Proposal> props, const PipelineConfig& cfg,
                                PipelineResult& result) {
  auto start = Clock::now();
  try {
    const CellGrid grid = build_cell_grid(img, cfg.seg);
    const SegmentLabeling labeling = segment_graph(grid, cfg.seg.k, cfg.seg.min_size);
    result.timings.segmentation += ms_since(start);
    start = Clock::now();
    const double sx = static_cast<double>(grid.grid_w) / img.width();
    const double sy = static_cast<double>(grid.grid_h) / img.height();
    const auto in_cells = scaled(props, sx, sy);
    auto expanded = segment_recursive_box(labeling, in_cells, cfg.seg.delta_set);
    const std::size_t per_box = cfg.seg.delta_set.size();
    for (std::size_t i = 0; i < expanded.size(); ++i) {
      // Boxes no segment grew keep their exact original coordinates.
      const std::size_t parent = i / per_box;
      Box& b = expanded[i].box;
      b = b == in_cells[parent].box ? props[parent].box : scale_box(b, 1.0 / sx, 1.0 / sy);
    }
    props = std::move(expanded);
    result.timings.seg_refine += ms_since(start);
  } catch (const Error& e) {
    result.warnings.push_back(std::string("segment stage skipped: ") + e.what());
    result.timings.seg_refine += ms_since(start);
  }
  return props;
}

PipelineResult refine_impl(const ColorImage& img, const GrayImage* gray, std::vector<Proposal> props,
                           const PipelineConfig& cfg) {
  if (img.empty()) throw Error(ErrorCode::kZeroDimension, "empty image");
  PipelineResult result;
  result.scanned = props.size();
  const auto start = Clock::now();
  if (cfg.seg_first) {
    if (cfg.enable_seg) props = seg_stage(img, std::move(props), cfg, result);
    if (cfg.enable_edge) props = edge_stage(img, gray, std::move(props), cfg, result);
  } else {
    if (cfg.enable_edge) props = edge_stage(img, gray, std::move(props), cfg, result);
    if (cfg.enable_seg) props = seg_stage(img, std::move(props), cfg, result);
  }

  const auto nms_start = Clock::now();
  for (Proposal& p : props) p.box = clip_box(p.box, img.width(), img.height());
  result.proposals = nms(props, cfg.nms_rho, cfg.max_proposals);
  result.timings.nms = ms_since(nms_start);
  result.timings.total = ms_since(start);
  return result;
}

}  // namespace

void PipelineConfig::validate() const {
  if (max_proposals < 1) throw Error(ErrorCode::kInvalidArgument, "max_proposals must be positive");
  if (scan.per_size_keep < 1 || scan.total_keep < 1) {
    throw Error(ErrorCode::kInvalidArgument, "scan keep counts must be positive");
  }
  if (!(scan.per_size_nms > 0 && scan.per_size_nms <= 1)) {
    throw Error(ErrorCode::kInvalidArgument, "per-size NMS threshold must lie in (0, 1]");
  }
  edge.validate();
  seg.validate();
  if (!(canny.sigma > 0) || !(canny.low >= 0) || !(canny.high >= canny.low)) {
    throw Error(ErrorCode::kInvalidArgument, "Canny needs sigma > 0 and 0 <= low <= high");
  }
  if (!(nms_rho > 0 && nms_rho <= 1)) throw Error(ErrorCode::kInvalidArgument, "nms rho must lie in (0, 1]");
  if (!(eval_eta > 0 && eval_eta <= 1)) throw Error(ErrorCode::kInvalidArgument, "eta must lie in (0, 1]");
  if (threads < 1) throw Error(ErrorCode::kInvalidArgument, "threads must be positive");
}

PipelineResult refine_proposals(const ColorImage& img, std::vector<Proposal> props, const PipelineConfig& cfg) {
  cfg.validate();
  return refine_impl(img, nullptr, std::move(props), cfg);
}

PipelineResult run_bingpp(const ColorImage& img, const BinarizedModel& model, const PipelineConfig& cfg) {
  cfg.validate();
  if (img.empty()) throw Error(ErrorCode::kZeroDimension, "empty image");
  const auto start = Clock::now();
  const GrayImage gray = to_gray(img);
  auto props = scan(gray, model, cfg.scan);
  const double bing_ms = ms_since(start);
  PipelineResult result = refine_impl(img, &gray, std::move(props), cfg);
  result.timings.bing = bing_ms;
  result.timings.total = ms_since(start);
  return result;
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  // Report the failure of the lowest index so the outcome does not depend on scheduling.
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::vector<PipelineResult> run_batch(std::span<const NamedImage> images, const BinarizedModel& model,
                                      const PipelineConfig& cfg, int threads) {
  cfg.validate();
  std::vector<PipelineResult> results(images.size());
  parallel_for(images.size(), threads, [&](std::size_t i) { results[i] = run_bingpp(images[i].image, model, cfg); });
  return results;
}

std::string proposals_csv(std::span<const std::string> image_ids, std::span<const std::vector<Proposal>> props) {
  if (image_ids.size() != props.size()) throw Error(ErrorCode::kInvalidArgument, "one proposal list per image id");
  std::string out = "image_id,x1,y1,x2,y2,score\n";
  char buf[160];
  for (std::size_t i = 0; i < image_ids.size(); ++i) {
    std::vector<Proposal> sorted = props[i];
    sort_by_score(sorted);
    for (const Proposal& p : sorted) {
      std::snprintf(buf, sizeof buf, ",%.2f,%.2f,%.2f,%.2f,%.6f\n", p.box.x1, p.box.y1, p.box.x2, p.box.y2, p.score);
      out += image_ids[i];
      out += buf;
    }
  }
  return out;
}

ProposalsByImage parse_proposals_csv(const std::string& text) {
  ProposalsByImage out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1 && line.rfind("image_id,", 0) == 0) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos || comma == 0) {
      throw Error(ErrorCode::kCorruptPayload, "proposals line " + std::to_string(line_no) + ": missing image id");
    }
    Proposal p;
    p.source = ProposalSource::kExternal;
    char tail = 0;
    if (std::sscanf(line.c_str() + comma + 1, "%lf,%lf,%lf,%lf,%lf%c", &p.box.x1, &p.box.y1, &p.box.x2, &p.box.y2,
                    &p.score, &tail) != 5 ||
        !p.box.valid() || !std::isfinite(p.score)) {
      throw Error(ErrorCode::kCorruptPayload, "proposals line " + std::to_string(line_no) + ": expected 5 numbers");
    }
    out[line.substr(0, comma)].push_back(p);
  }
  return out;
}

}  // namespace bingpp
