#include "commands.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "bingpp/error.hpp"

namespace bingpp::cli {

namespace fs = std::filesystem;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "short write to " + path);
}

BinarizedModel load_model(const PipelineConfig& cfg) {
  if (cfg.model_path.empty()) throw Error(ErrorCode::kModelMissing, "no model given (--model or config \"model\")");
  return read_model(cfg.model_path);
}

void log_warnings(const std::string& id, const PipelineResult& r) {
  for (const std::string& w : r.warnings) spdlog::warn("{}: {}", id, w);
}

double median(std::vector<double> v) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string fmt_double(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

}  // namespace

PipelineConfig resolve_config(const Overrides& o) {
  PipelineConfig cfg = o.config_path.empty() ? PipelineConfig{} : read_config(o.config_path);
  if (!o.model_path.empty()) cfg.model_path = o.model_path;
  if (o.max_proposals) cfg.max_proposals = *o.max_proposals;
  if (o.eta) cfg.eval_eta = *o.eta;
  if (!o.gamma.empty()) cfg.edge.gamma = o.gamma;
  if (o.iters) cfg.edge.max_iters = *o.iters;
  if (o.epsilon) cfg.edge.epsilon = *o.epsilon;
  if (!o.delta.empty()) {
    cfg.seg.delta_set = o.delta;
    std::sort(cfg.seg.delta_set.begin(), cfg.seg.delta_set.end());
  }
  if (o.nms_rho) cfg.nms_rho = *o.nms_rho;
  if (o.no_edge) cfg.enable_edge = false;
  if (o.no_seg) cfg.enable_seg = false;
  if (o.seg_k) cfg.seg.k = *o.seg_k;
  if (o.min_size) cfg.seg.min_size = *o.min_size;
  if (o.threads) cfg.threads = *o.threads;
  if (o.seed) cfg.seed = *o.seed;
  cfg.validate();
  return cfg;
}

std::vector<NamedImage> load_images(const std::string& path) {
  const fs::path p(path);
  if (!fs::exists(p)) throw Error(ErrorCode::kIo, "input not found: " + path);
  std::vector<fs::path> files;
  if (fs::is_directory(p)) {
    for (const auto& entry : fs::directory_iterator(p)) {
      std::string ext = entry.path().extension().string();
      std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
      const bool compressed = ext == ".png" || ext == ".jpg" || ext == ".jpeg";
      if (entry.is_regular_file() && (ext == ".ppm" || ext == ".pgm" || (compressed && has_compressed_decoders()))) {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw Error(ErrorCode::kIo, "no readable images in " + path);
  } else {
    files.push_back(p);
  }
  std::vector<NamedImage> out;
  out.reserve(files.size());
  for (const fs::path& f : files) out.push_back({f.stem().string(), read_image(f.string())});
  return out;
}

int cmd_propose(const Overrides& o, const ProposeArgs& a) {
  const PipelineConfig cfg = resolve_config(o);
  const BinarizedModel model = load_model(cfg);
  const auto images = load_images(a.input);
  const auto results = run_batch(images, model, cfg, cfg.threads);

  std::vector<std::string> ids;
  std::vector<std::vector<Proposal>> props;
  for (std::size_t i = 0; i < images.size(); ++i) {
    log_warnings(images[i].id, results[i]);
    ids.push_back(images[i].id);
    props.push_back(results[i].proposals);
  }
  write_file(a.out, proposals_csv(ids, props));
  spdlog::info("wrote proposals for {} images to {}", images.size(), a.out);
  return 0;
}

int cmd_eval(const Overrides& o, const EvalArgs& a) {
  const PipelineConfig cfg = resolve_config(o);
  const auto gts = load_ground_truth(a.gt);
  if (gts.empty()) throw Error(ErrorCode::kNoGroundTruth, "ground truth file holds no objects: " + a.gt);
  const ProposalsByImage props = parse_proposals_csv(read_file(a.proposals));

  std::map<std::string, bool> gt_images;
  for (const GroundTruth& gt : gts) gt_images[gt.image_id] = true;
  for (const auto& [id, list] : props) {
    if (!gt_images.count(id)) spdlog::warn("proposals for image {} have no ground truth", id);
  }
  for (const auto& [id, unused] : gt_images) {
    if (!props.count(id)) spdlog::warn("image {} has ground truth but no proposals", id);
  }

  EvalParams params;
  params.include_difficult = !a.exclude_difficult;
  if (std::find(params.etas.begin(), params.etas.end(), cfg.eval_eta) == params.etas.end()) {
    params.etas.push_back(cfg.eval_eta);
    std::sort(params.etas.begin(), params.etas.end());
  }
  const MetricsReport report = evaluate(gts, props, params);
  write_file(a.out, report_to_json(report));
  if (!a.curve_out.empty()) write_file(a.curve_out, curve_to_csv(report));
  for (const DrEntry& e : report.dr) {
    if (e.eta == cfg.eval_eta && e.budget == params.abo_budget) {
      std::printf("DR@%.2f (top %zu): %.4f\n", e.eta, e.budget, e.dr);
    }
  }
  std::printf("MABO: %.4f over %zu objects in %zu images\n", report.mabo, report.objects, report.images);
  return 0;
}

int cmd_learn(const Overrides& o, const LearnArgs& a) {
  const PipelineConfig cfg = resolve_config(o);
  const BinarizedModel model = load_model(cfg);
  const auto images = load_images(a.input);
  const auto gts = load_ground_truth(a.gt);
  const LearnedParameters learned = learn_parameters(images, gts, model, cfg);

  std::ostringstream js;
  js << "{\n  \"gamma\": [";
  for (std::size_t i = 0; i < learned.gamma.gamma.size(); ++i) {
    js << (i ? ", " : "") << fmt_double("%.2f", learned.gamma.gamma[i]);
  }
  js << "],\n  \"delta\": [";
  for (std::size_t i = 0; i < learned.delta.best.size(); ++i) {
    js << (i ? ", " : "") << fmt_double("%.1f", learned.delta.best[i]);
  }
  js << "]\n}\n";
  write_file(a.out, js.str());

  if (!a.gamma_trace.empty()) {
    std::string csv = "iteration,gamma,loss\n";
    for (std::size_t t = 0; t < learned.gamma.table.size(); ++t) {
      for (std::size_t g = 0; g < learned.gamma.table[t].size(); ++g) {
        csv += std::to_string(t) + "," + fmt_double("%.2f", g / 100.0) + "," +
               std::to_string(learned.gamma.table[t][g]) + "\n";
      }
    }
    write_file(a.gamma_trace, csv);
  }
  if (!a.delta_table.empty()) write_file(a.delta_table, delta_table_csv(learned.delta));
  std::printf("%s", js.str().c_str());
  return 0;
}

int cmd_bench(const Overrides& o, const BenchArgs& a) {
  const PipelineConfig cfg = resolve_config(o);
  const BinarizedModel model = load_model(cfg);
  const auto images = load_images(a.input);
  // Multi-thread mode uses --threads, or every hardware thread (at least 2).
  const int multi = cfg.threads > 1 ? cfg.threads : std::max(2, static_cast<int>(std::thread::hardware_concurrency()));

  std::string csv = "mode,image_id,bing_ms,edge_ms,segmentation_ms,seg_refine_ms,nms_ms,total_ms\n";
  for (const int threads : {1, multi}) {
    const std::string mode = threads == 1 ? "single" : "multi";
    // Stage shares are only meaningful single-threaded; multi-thread rows
    // include time spent waiting for a core when workers outnumber cores.
    std::vector<PipelineResult> best;
    double wall = 1e300;
    for (int rep = 0; rep < std::max(1, a.repeats); ++rep) {
      const auto start = std::chrono::steady_clock::now();
      auto results = run_batch(images, model, cfg, threads);
      const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      if (ms < wall) {
        wall = ms;
        best = std::move(results);
      }
    }
    StageTimings sum;
    std::vector<double> totals;
    for (std::size_t i = 0; i < images.size(); ++i) {
      const StageTimings& t = best[i].timings;
      csv += mode + "," + images[i].id;
      for (const double v : {t.bing, t.edge, t.segmentation, t.seg_refine, t.nms, t.total}) {
        csv += "," + fmt_double("%.3f", v);
      }
      csv += "\n";
      sum.bing += t.bing;
      sum.edge += t.edge;
      sum.segmentation += t.segmentation;
      sum.seg_refine += t.seg_refine;
      sum.nms += t.nms;
      sum.total += t.total;
      totals.push_back(t.total);
    }
    const double n = static_cast<double>(images.size());
    const double stages = sum.bing + sum.edge + sum.segmentation + sum.seg_refine + sum.nms;
    const auto share = [&](double v) { return stages > 0 ? 100.0 * v / stages : 0.0; };
    std::printf("%s-thread (%d worker%s): %zu images, wall %.1f ms, %.2f ms per image\n", mode.c_str(), threads,
                threads == 1 ? "" : "s", images.size(), wall, wall / static_cast<double>(images.size()));
    std::printf("  per image: mean %.2f ms, median %.2f ms\n", sum.total / n, median(totals));
    std::printf("  shares: bing %.1f%%, edge %.1f%%, segmentation %.1f%%, seg_refine %.1f%%, nms %.1f%%\n",
                share(sum.bing), share(sum.edge), share(sum.segmentation), share(sum.seg_refine), share(sum.nms));
    const double refinement = sum.edge + sum.segmentation + sum.seg_refine;
    if (refinement > 0) {
      std::printf("  refinement split: edge %.1f%%, segment stages %.1f%%\n", 100.0 * sum.edge / refinement,
                  100.0 * (sum.segmentation + sum.seg_refine) / refinement);
    }
  }
  if (!a.out.empty()) write_file(a.out, csv);
  return 0;
}

int cmd_train(const Overrides& o, const TrainArgs& a) {
  const PipelineConfig cfg = resolve_config(o);
  const auto images = load_images(a.input);
  const auto gts = load_ground_truth(a.gt);
  std::map<std::string, std::vector<Box>> by_image;
  for (const GroundTruth& gt : gts) by_image[gt.image_id].push_back(gt.box);

  std::vector<TrainingImage> data;
  for (const NamedImage& img : images) {
    const auto it = by_image.find(img.id);
    if (it == by_image.end()) continue;
    data.push_back({to_gray(img.image), it->second});
  }
  if (data.empty()) throw Error(ErrorCode::kEmptyDataset, "no training image has ground truth");

  TrainParams params;
  params.eta = cfg.eval_eta;
  params.n_w = a.n_w;
  params.n_g = a.n_g;
  params.negatives_per_image = a.negatives;
  params.seed = cfg.seed;
  TrainReport report;
  const BinarizedModel model = train_simple(data, params, &report);
  write_model(a.out, model);
  std::printf("trained on %zu images: %zu positives, %zu negatives, %zu sizes kept, %zu dropped, accuracy %.4f\n",
              data.size(), report.positives, report.negatives, model.sizes.size(), report.dropped_sizes,
              report.training_accuracy);
  return 0;
}

int cmd_synth(const Overrides& o, const SynthArgs& a) {
  const PipelineConfig cfg = resolve_config(o);
  if (a.count < 1 || a.min_objects < 0 || a.max_objects < a.min_objects) {
    throw Error(ErrorCode::kInvalidArgument, "need count >= 1 and 0 <= min-objects <= max-objects");
  }
  fs::create_directories(a.out);
  std::vector<GroundTruth> all;
  for (int i = 0; i < a.count; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "synth_%04d", i);
    const int span = a.max_objects - a.min_objects + 1;
    const std::uint64_t seed = cfg.seed * 1000003u + static_cast<std::uint64_t>(i);
    const int n = a.min_objects + static_cast<int>(seed % static_cast<std::uint64_t>(span));
    const SyntheticScene scene = synth_scene(seed, n, a.width, a.height, name);
    write_ppm((fs::path(a.out) / (std::string(name) + ".ppm")).string(), scene.image);
    all.insert(all.end(), scene.objects.begin(), scene.objects.end());
  }
  write_file((fs::path(a.out) / "gt.jsonl").string(), to_gt_jsonl(all));
  std::printf("wrote %d scenes and %zu objects to %s\n", a.count, all.size(), a.out.c_str());
  return 0;
}

}  // namespace bingpp::cli
