// Acceptance suite: one PASS/FAIL/SKIP line per criterion.
//
//   bingpp_acceptance [--workdir DIR] [--only N]
//
// Criterion 10 runs only when BINGPP_VOC_DIR points at a VOC2007 tree
// (Annotations/, JPEGImages/, ImageSets/Main/test.txt). BINGPP_VOC_MODEL
// names a trained model; without it one is trained on trainval.txt.
// BINGPP_VOC_LIMIT caps the number of test images.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <sys/wait.h>

#include "bingpp/error.hpp"
#include "bingpp/pipeline.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace bingpp;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

enum class Status { kPass, kFail, kSkip };

struct Outcome {
  Status status;
  std::string detail;
};

Outcome pass(std::string d) { return {Status::kPass, std::move(d)}; }
Outcome fail(std::string d) { return {Status::kFail, std::move(d)}; }
Outcome skip(std::string d) { return {Status::kSkip, std::move(d)}; }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path g_workdir = "acceptance_work";

// -- shared fixtures ---------------------------------------------------------

constexpr int kW = 640, kH = 480;

std::vector<TrainingImage> training_set(std::uint64_t seed0, int count) {
  std::vector<TrainingImage> data;
  for (int i = 0; i < count; ++i) {
    const SyntheticScene s = synth_scene(seed0 + i, 3 + i % 4, kW, kH);
    TrainingImage t{to_gray(s.image), {}};
    for (const GroundTruth& gt : s.objects) t.objects.push_back(gt.box);
    data.push_back(std::move(t));
  }
  return data;
}

const BinarizedModel& synthetic_model() {
  static const BinarizedModel model = train_simple(training_set(7000, 40));
  return model;
}

struct SceneSet {
  std::vector<NamedImage> images;
  std::vector<GroundTruth> gts;
};

SceneSet scene_set(std::uint64_t seed0, int count, int min_objects, int max_objects, int w = kW, int h = kH) {
  SceneSet out;
  for (int i = 0; i < count; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "scene_%03d", i);
    const int n = min_objects + i % (max_objects - min_objects + 1);
    SyntheticScene s = synth_scene(seed0 + i, n, w, h, id);
    out.gts.insert(out.gts.end(), s.objects.begin(), s.objects.end());
    out.images.push_back({id, std::move(s.image)});
  }
  return out;
}

// -- criteria ----------------------------------------------------------------

Outcome distance_transform_exactness() {
  const auto start = Clock::now();
  std::mt19937_64 rng(101);
  constexpr int n = 64;
  for (int trial = 0; trial < 200; ++trial) {
    EdgeMap e{n, n, std::vector<std::uint8_t>(n * n, 0)};
    const unsigned percent = 1 + static_cast<unsigned>(trial % 25);
    for (auto& m : e.mask) m = rng() % 100 < percent ? 1 : 0;
    e.mask[rng() % e.mask.size()] = 1;
    const NearestEdgeMap got = distance_transform(e);
    const auto want = oracle::brute_force_dt(e.mask, n, n);
    for (int y = 0; y < n; ++y) {
      for (int x = 0; x < n; ++x) {
        const std::size_t i = got.index(x, y);
        if (got.sqdist[i] != want[i].sqdist) {
          return fail(fmt("mask %d pixel (%d,%d): sqdist %lld, brute force %lld", trial, x, y,
                          static_cast<long long>(got.sqdist[i]), static_cast<long long>(want[i].sqdist)));
        }
        const int nx = got.nearest_x[i], ny = got.nearest_y[i];
        const std::int64_t d = std::int64_t{nx - x} * (nx - x) + std::int64_t{ny - y} * (ny - y);
        if (!e.at(nx, ny) || d != got.sqdist[i]) {
          return fail(fmt("mask %d pixel (%d,%d): nearest (%d,%d) does not attain sqdist", trial, x, y, nx, ny));
        }
      }
    }
  }
  const double secs = seconds_since(start);
  if (secs >= 10) return fail(fmt("exact on 200 masks but took %.2f s", secs));
  return pass(fmt("200 masks of 64x64 exact at every pixel, %.2f s", secs));
}

Outcome binarized_scoring() {
  std::mt19937_64 rng(202);
  std::normal_distribution<double> normal(0, 1);
  Filter w{};
  for (double& v : w) v = normal(rng);
  BinarizedModel m = make_model(w, 3, 8, default_window_sizes());
  m.w = m.reconstructed();

  std::vector<NGFeature> feats(1000);
  for (auto& f : feats) {
    for (auto& v : f) v = static_cast<std::uint8_t>(rng() % 256);
  }
  double worst = 0;
  for (const auto& f : feats) worst = std::max(worst, std::abs(score_fast(m, bit_planes(f)) - score_exact(m, f)));
  if (worst > 1e-9) return fail(fmt("n_g=8 max |fast - exact| = %.3g", worst));

  std::string trace;
  double previous = INFINITY;
  for (int n_g = 1; n_g <= 8; ++n_g) {
    m.n_g = n_g;
    double sum = 0;
    for (const auto& f : feats) sum += std::abs(score_fast(m, bit_planes(f)) - score_exact(m, f));
    const double mean = sum / feats.size();
    trace += fmt("%s%.3g", n_g == 1 ? "" : " ", mean);
    if (mean > previous) return fail("mean |error| rises with n_g: " + trace);
    previous = mean;
  }
  return pass(fmt("n_g=8 max error %.2g; mean |error| n_g=1..8: ", worst) + trace);
}

Outcome nms_equivalence() {
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> pos(0, 100), size(1, 50), score(0, 1);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<Proposal> props(1 + rng() % 50);
    for (auto& p : props) {
      const double x = pos(rng), y = pos(rng);
      p.box = {x, y, x + size(rng), y + size(rng)};
      p.score = trial % 3 == 0 ? static_cast<double>(rng() % 4) : score(rng);  // some runs force ties
    }
    for (const double rho : {0.3, 0.5, 0.85}) {
      if (nms_indices(props, rho) != oracle::nms(props, rho)) {
        return fail(fmt("instance %d with %zu boxes differs at rho %.2f", trial, props.size(), rho));
      }
    }
  }
  return pass("500 instances of up to 50 boxes match at rho 0.3, 0.5, 0.85");
}

Outcome edge_analytic_case() {
  // Edge pixels on the boundary of the pixel rectangle [10,20] x [10,30].
  constexpr int w = 48, h = 56;
  EdgeMap e{w, h, std::vector<std::uint8_t>(w * h, 0)};
  for (int x = 10; x <= 20; ++x) e.mask[10 * w + x] = e.mask[30 * w + x] = 1;
  for (int y = 10; y <= 30; ++y) e.mask[y * w + 10] = e.mask[y * w + 20] = 1;
  const Box object{10, 10, 20, 30};
  const NearestEdgeMap nmap = distance_transform(e);

  EdgeRefineParams params;
  params.gamma = {1.0};
  params.max_iters = 3;
  params.epsilon = 0.95;
  const std::vector<Proposal> inflated{{{5, 0, 25, 40}, 1.0}};  // 2x about the center

  EdgeRefineParams one = params;
  one.max_iters = 1;
  const Box after_one = edge_recursive_box(nmap, inflated, one)[0].box;
  if (after_one != object) {
    return fail(fmt("after one iteration (%.2f,%.2f,%.2f,%.2f)", after_one.x1, after_one.y1, after_one.x2, after_one.y2));
  }
  EdgeRefineStats stats;
  const Box final_box = edge_recursive_box(nmap, inflated, params, &stats)[0].box;
  if (final_box != object) return fail("box drifted after the first iteration");
  if (stats.iterations != 2) return fail(fmt("expected an early break after 2 of 3 iterations, ran %zu", stats.iterations));
  return pass("gamma=1 snaps to (10,10,20,30) in one iteration; epsilon=0.95 stops at iteration 2 of 3");
}

Outcome learning_traces() {
  const auto start = Clock::now();
  const SceneSet set = scene_set(8000, 20, 3, 6);
  // At eta 0.5 raw recall on these scenes is already perfect and every trace
  // is flat; a strict threshold leaves something to learn.
  PipelineConfig cfg;
  cfg.eval_eta = 0.85;
  const LearnedParameters a = learn_parameters(set.images, set.gts, synthetic_model(), cfg);
  const LearnedParameters b = learn_parameters(set.images, set.gts, synthetic_model(), cfg);

  const auto& g = a.gamma;
  for (std::size_t t = 0; t < g.min_loss.size(); ++t) {
    if (g.min_loss[t] != *std::min_element(g.table[t].begin(), g.table[t].end())) {
      return fail(fmt("gamma iteration %zu does not report its table minimum", t));
    }
    if (t > 0 && g.min_loss[t] > g.min_loss[t - 1]) return fail(fmt("gamma loss rises at iteration %zu", t));
  }
  const auto& d = a.delta;
  if (d.table.size() != 511) return fail(fmt("delta table has %zu rows", d.table.size()));
  // Independent pick: minimum loss, then fewest thresholds, then smallest sorted set.
  const DeltaTableRow* best = &d.table[0];
  for (const DeltaTableRow& row : d.table) {
    const auto key = [](const DeltaTableRow& r) { return std::make_tuple(r.loss, std::popcount(r.mask), delta_subset(r.mask)); };
    if (key(row) < key(*best)) best = &row;
  }
  if (d.best_mask != best->mask || d.best_loss != best->loss) {
    return fail(fmt("delta pick mask %u loss %zu, table minimum mask %u loss %zu", d.best_mask, d.best_loss, best->mask,
                    best->loss));
  }
  if (a.gamma.gamma != b.gamma.gamma || d.best_mask != b.delta.best_mask) return fail("learning is not deterministic");
  const double secs = seconds_since(start);
  if (secs >= 60) return fail(fmt("correct but took %.1f s", secs));

  std::string gammas;
  for (std::size_t t = 0; t < g.gamma.size(); ++t) gammas += fmt("%s%.2f", t ? "," : "", g.gamma[t]);
  std::string deltas;
  for (std::size_t i = 0; i < d.best.size(); ++i) deltas += fmt("%s%.1f", i ? "," : "", d.best[i]);
  return pass(fmt("20 images at eta 0.85: gamma [%s] losses %zu..%zu, delta {%s} loss %zu, %.1f s", gammas.c_str(),
                  g.min_loss.front(), g.min_loss.back(), deltas.c_str(), d.best_loss, secs));
}

Outcome segment_properties() {
  std::mt19937_64 rng(606);
  const SegRefineParams seg;
  std::vector<double> deltas;
  for (int i = 0; i < kDeltaCandidates; ++i) deltas.push_back(delta_candidate(i));
  std::size_t boxes = 0, overlaps = 0;
  for (int scene = 0; scene < 5; ++scene) {
    const SyntheticScene s = synth_scene(6000 + scene, 4, kW, kH);
    const SegmentLabeling l = segment_graph(build_cell_grid(s.image, seg), seg.k, seg.min_size);
    std::uniform_real_distribution<double> ux(-3, l.grid_w + 3), uy(-3, l.grid_h + 3);
    std::vector<Proposal> props;
    for (int i = 0; i < 100; ++i) {
      const double a = ux(rng), b = ux(rng), c = uy(rng), d = uy(rng);
      props.push_back({{std::min(a, b), std::min(c, d), std::max(a, b), std::max(c, d)}, 1.0});
    }
    const auto out = segment_recursive_box(l, props, deltas);
    for (std::size_t p = 0; p < props.size(); ++p, ++boxes) {
      for (std::size_t k = 0; k < deltas.size(); ++k) {
        const Box& b = out[p * deltas.size() + k].box;
        if (!contains(b, props[p].box)) return fail(fmt("scene %d box %zu: delta %.1f output misses its parent", scene, p, deltas[k]));
        if (k > 0 && !contains(out[p * deltas.size() + k - 1].box, b)) {
          return fail(fmt("scene %d box %zu: delta %.1f output escapes the delta %.1f output", scene, p, deltas[k], deltas[k - 1]));
        }
      }
      if (overlaps < 500) {
        const int label = static_cast<int>(rng() % l.segments.size());
        const double got = seg_overlap(l.segments[label], props[p].box);
        const double want = oracle::seg_overlap(l.labels, l.grid_w, l.grid_h, label, props[p].box);
        if (got != want) return fail(fmt("seg_overlap %.6f, cell count %.6f", got, want));
        ++overlaps;
      }
    }
  }
  return pass(fmt("%zu boxes x 9 deltas contain their parents and nest; %zu overlaps match the cell count", boxes,
                  overlaps));
}

Outcome synthetic_improvement() {
  const auto start = Clock::now();
  const SceneSet set = scene_set(9000, 50, 3, 6);
  PipelineConfig full;
  PipelineConfig raw;
  raw.enable_edge = raw.enable_seg = false;
  ProposalsByImage full_props, raw_props;
  for (const NamedImage& img : set.images) {
    full_props[img.id] = run_bingpp(img.image, synthetic_model(), full).proposals;
    raw_props[img.id] = run_bingpp(img.image, synthetic_model(), raw).proposals;
  }
  const double dr = detection_recall(set.gts, full_props, 0.5, 1000);
  const double mabo_full = abo_mabo(set.gts, full_props, 1000).mabo;
  const double mabo_raw = abo_mabo(set.gts, raw_props, 1000).mabo;
  const double secs = seconds_since(start);
  const std::string d = fmt("%zu objects: DR@0.5 %.4f, MABO %.4f vs raw %.4f, %.1f s incl. training", set.gts.size(), dr,
                            mabo_full, mabo_raw, secs);
  if (dr < 0.95 || !(mabo_full > mabo_raw) || secs >= 120) return fail(d);
  return pass(d);
}

int run_cli(const std::string& args, const fs::path& log) {
#ifdef BINGPP_CLI_PATH
  const std::string cmd = std::string("\"") + BINGPP_CLI_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int rc = std::system(cmd.c_str());
  return rc == -1 ? -1 : (WIFEXITED(rc) ? WEXITSTATUS(rc) : -1);
#else
  (void)args;
  (void)log;
  return -1;
#endif
}

Outcome determinism() {
  const SceneSet set = scene_set(9500, 6, 3, 6);
  const PipelineConfig cfg;
  std::vector<std::string> ids;
  for (const NamedImage& img : set.images) ids.push_back(img.id);
  auto csv_for = [&](int threads) {
    std::vector<std::vector<Proposal>> props;
    for (PipelineResult& r : run_batch(set.images, synthetic_model(), cfg, threads)) props.push_back(std::move(r.proposals));
    return proposals_csv(ids, props);
  };
  const std::string lib1 = csv_for(1), lib1b = csv_for(1), lib4 = csv_for(4);
  if (lib1 != lib1b) return fail("library: two single-thread runs differ");
  if (lib1 != lib4) return fail("library: 1 and 4 threads differ");

#ifndef BINGPP_CLI_PATH
  return pass(fmt("library CSVs identical across runs and threads (%zu bytes); CLI not built", lib1.size()));
#else
  const fs::path dir = g_workdir / "determinism";
  fs::remove_all(dir);
  fs::create_directories(dir / "images");
  for (const NamedImage& img : set.images) write_ppm((dir / "images" / (img.id + ".ppm")).string(), img.image);
  write_model((dir / "model.json").string(), synthetic_model());
  std::vector<std::string> outputs;
  for (const int threads : {1, 4, 1, 4}) {
    const fs::path out = dir / fmt("proposals_%zu.csv", outputs.size());
    const int rc = run_cli(fmt("propose --input \"%s\" --model \"%s\" --out \"%s\" --threads %d",
                               (dir / "images").c_str(), (dir / "model.json").c_str(), out.c_str(), threads),
                           dir / "propose.log");
    if (rc != 0) return fail(fmt("bingpp propose exited with %d; see %s", rc, (dir / "propose.log").c_str()));
    outputs.push_back(read_file(out));
  }
  for (const std::string& o : outputs) {
    if (o != outputs[0]) return fail("CLI CSVs differ across runs or thread counts");
  }
  if (outputs[0] != lib1) return fail("CLI CSV differs from the library CSV");
  return pass(fmt("library and CLI CSVs byte-identical across runs and threads 1/4 (%zu bytes)", lib1.size()));
#endif
}

Outcome performance() {
  const SceneSet set = scene_set(9700, 20, 3, 6);
  const PipelineConfig cfg;
  run_bingpp(set.images[0].image, synthetic_model(), cfg);  // warm-up
  StageTimings sum;
  std::size_t inputs = 0;
  for (const NamedImage& img : set.images) {
    const PipelineResult r = run_bingpp(img.image, synthetic_model(), cfg);
    sum.bing += r.timings.bing;
    sum.edge += r.timings.edge;
    sum.segmentation += r.timings.segmentation;
    sum.seg_refine += r.timings.seg_refine;
    sum.nms += r.timings.nms;
    sum.total += r.timings.total;
    inputs += r.scanned;
  }
  const double n = static_cast<double>(set.images.size());
  const double per_image = sum.total / n;
  const double segment = sum.segmentation + sum.seg_refine;
  const double refinement = sum.edge + segment;
  std::string d = fmt("%.1f ms per image (%.0f proposals in); shares bing %.1f%%, edge %.1f%%, segmentation %.1f%%, "
                      "seg_refine %.1f%%, nms %.1f%%; refinement split edge %.1f%% vs segment %.1f%%",
                      per_image, inputs / n, 100 * sum.bing / sum.total, 100 * sum.edge / sum.total,
                      100 * sum.segmentation / sum.total, 100 * sum.seg_refine / sum.total, 100 * sum.nms / sum.total,
                      100 * sum.edge / refinement, 100 * segment / refinement);
  if (per_image > 100) return fail(d);
  if (!(segment > sum.edge)) return fail(d + " (segment stages do not dominate)");

#ifdef BINGPP_CLI_PATH
  const fs::path dir = g_workdir / "bench";
  fs::remove_all(dir);
  fs::create_directories(dir / "images");
  for (std::size_t i = 0; i < 3; ++i) {
    write_ppm((dir / "images" / (set.images[i].id + ".ppm")).string(), set.images[i].image);
  }
  write_model((dir / "model.json").string(), synthetic_model());
  const int rc = run_cli(fmt("bench --input \"%s\" --model \"%s\" --out \"%s\"", (dir / "images").c_str(),
                             (dir / "model.json").c_str(), (dir / "timings.csv").c_str()),
                         dir / "bench.log");
  const std::string log = read_file(dir / "bench.log");
  if (rc != 0 || log.find("shares:") == std::string::npos || log.find("refinement split") == std::string::npos) {
    return fail(d + fmt(" (bingpp bench exited %d without stage shares)", rc));
  }
  d += "; bench prints shares";
#endif
  return pass(d);
}

std::vector<std::string> read_lines(const fs::path& p) {
  std::vector<std::string> out;
  std::ifstream in(p);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

std::vector<NamedImage> voc_images(const fs::path& root, const std::vector<std::string>& ids) {
  std::vector<NamedImage> images(ids.size());
  parallel_for(ids.size(), 4, [&](std::size_t i) {
    images[i] = {ids[i], read_image((root / "JPEGImages" / (ids[i] + ".jpg")).string())};
  });
  return images;
}

std::vector<GroundTruth> voc_objects(const fs::path& root, const std::vector<std::string>& ids) {
  std::vector<GroundTruth> gts;
  for (const std::string& id : ids) {
    auto part = load_ground_truth((root / "Annotations" / (id + ".xml")).string());
    gts.insert(gts.end(), part.begin(), part.end());
  }
  return gts;
}

Outcome voc_reproduction() {
  const char* env = std::getenv("BINGPP_VOC_DIR");
  if (!env || !*env) return skip("BINGPP_VOC_DIR not set");
  const fs::path root(env);
  if (!fs::exists(root / "ImageSets" / "Main" / "test.txt")) return skip("no ImageSets/Main/test.txt under " + root.string());
  if (!has_compressed_decoders()) return fail("this build cannot decode JPEG images");

  std::vector<std::string> test_ids = read_lines(root / "ImageSets" / "Main" / "test.txt");
  if (const char* limit = std::getenv("BINGPP_VOC_LIMIT")) {
    test_ids.resize(std::min(test_ids.size(), static_cast<std::size_t>(std::strtoul(limit, nullptr, 10))));
  }

  BinarizedModel model;
  if (const char* path = std::getenv("BINGPP_VOC_MODEL"); path && *path) {
    model = read_model(path);
  } else {
    const auto train_ids = read_lines(root / "ImageSets" / "Main" / "trainval.txt");
    const auto images = voc_images(root, train_ids);
    std::map<std::string, std::vector<Box>> boxes;
    for (const GroundTruth& gt : voc_objects(root, train_ids)) boxes[gt.image_id].push_back(gt.box);
    std::vector<TrainingImage> data;
    for (const NamedImage& img : images) data.push_back({to_gray(img.image), boxes[img.id]});
    model = train_simple(data);
  }

  const auto images = voc_images(root, test_ids);
  const auto gts = voc_objects(root, test_ids);
  PipelineConfig cfg;
  ProposalsByImage props;
  const auto results = run_batch(images, model, cfg, 4);
  for (std::size_t i = 0; i < images.size(); ++i) props[images[i].id] = results[i].proposals;
  const double dr = 100 * detection_recall(gts, props, 0.5, 1000);
  const double mabo = 100 * abo_mabo(gts, props, 1000).mabo;
  const std::string d = fmt("%zu images: DR@0.5 %.1f (target 93.7 +/- 3), MABO %.1f (target 77.5 +/- 3)", images.size(),
                            dr, mabo);
  if (std::abs(dr - 93.7) > 3 || std::abs(mabo - 77.5) > 3) return fail(d);
  return pass(d);
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--workdir" && i + 1 < argc) {
      g_workdir = argv[++i];
    } else if (arg == "--only" && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: %s [--workdir DIR] [--only N]\n", argv[0]);
      return 1;
    }
  }
  fs::create_directories(g_workdir);

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"distance transform exactness", distance_transform_exactness},
      {"binarized scoring", binarized_scoring},
      {"NMS oracle equivalence", nms_equivalence},
      {"edge refinement analytic case", edge_analytic_case},
      {"monotone learning traces", learning_traces},
      {"segment expansion properties", segment_properties},
      {"end-to-end synthetic improvement", synthetic_improvement},
      {"pipeline determinism", determinism},
      {"single-thread performance", performance},
      {"VOC2007 reproduction (optional)", voc_reproduction},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only && static_cast<int>(i + 1) != only) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = fail(std::string("exception: ") + e.what());
    }
    const char* tag = o.status == Status::kPass ? "PASS" : o.status == Status::kFail ? "FAIL" : "SKIP";
    std::printf("[%s] %2zu %s: %s\n", tag, i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
    failures += o.status == Status::kFail;
  }
  return failures ? 1 : 0;
}
