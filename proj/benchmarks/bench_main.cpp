#include <random>

#include <benchmark/benchmark.h>

#include "bingpp/pipeline.hpp"

using namespace bingpp;

namespace {

std::vector<Proposal> random_props(std::size_t n, int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(0, w), uy(0, h), score(0, 1);
  std::vector<Proposal> out(n);
  for (Proposal& p : out) {
    const double a = ux(rng), b = ux(rng), c = uy(rng), d = uy(rng);
    p = {{std::min(a, b), std::min(c, d), std::max(a, b) + 1, std::max(c, d) + 1}, score(rng)};
  }
  return out;
}

const BinarizedModel& model() {
  static const BinarizedModel m = [] {
    std::vector<TrainingImage> data;
    for (int i = 0; i < 20; ++i) {
      const SyntheticScene s = synth_scene(7000 + i, 3 + i % 4);
      TrainingImage t{to_gray(s.image), {}};
      for (const GroundTruth& gt : s.objects) t.objects.push_back(gt.box);
      data.push_back(std::move(t));
    }
    return train_simple(data);
  }();
  return m;
}

const SyntheticScene& scene() {
  static const SyntheticScene s = synth_scene(42, 5);
  return s;
}

NearestEdgeMap scene_edges() { return distance_transform(canny(resize(to_gray(scene().image), 213, 160))); }

void BM_Iou(benchmark::State& state) {
  const auto props = random_props(1024, 640, 480, 1);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(iou(props[i & 1023].box, props[(i + 1) & 1023].box));
    ++i;
  }
}
BENCHMARK(BM_Iou);

void BM_Nms(benchmark::State& state) {
  const auto props = random_props(static_cast<std::size_t>(state.range(0)), 640, 480, 2);
  for (auto _ : state) benchmark::DoNotOptimize(nms(props, 0.85, 1000));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Nms)->Arg(500)->Arg(1000)->Arg(3000)->Unit(benchmark::kMillisecond);

void BM_DistanceTransform(benchmark::State& state) {
  const EdgeMap edges = canny(resize(to_gray(scene().image), 213, 160));
  for (auto _ : state) benchmark::DoNotOptimize(distance_transform(edges));
}
BENCHMARK(BM_DistanceTransform)->Unit(benchmark::kMicrosecond);

void BM_ExtentDirectScan(benchmark::State& state) {
  const NearestEdgeMap nmap = scene_edges();
  const auto props = random_props(1000, nmap.width, nmap.height, 3);
  for (auto _ : state) {
    for (const Proposal& p : props) benchmark::DoNotOptimize(box_nearest_extent(nmap, p.box));
  }
}
BENCHMARK(BM_ExtentDirectScan)->Unit(benchmark::kMicrosecond);

void BM_ExtentIndexed(benchmark::State& state) {
  const NearestEdgeMap nmap = scene_edges();
  const auto props = random_props(1000, nmap.width, nmap.height, 3);
  for (auto _ : state) {
    const NearestExtentIndex index(nmap);  // build cost included
    for (const Proposal& p : props) benchmark::DoNotOptimize(index.extent(p.box));
  }
}
BENCHMARK(BM_ExtentIndexed)->Unit(benchmark::kMicrosecond);

void BM_Canny(benchmark::State& state) {
  const GrayImage small = resize(to_gray(scene().image), 213, 160);
  for (auto _ : state) benchmark::DoNotOptimize(canny(small));
}
BENCHMARK(BM_Canny)->Unit(benchmark::kMicrosecond);

void BM_Segmentation(benchmark::State& state) {
  const SegRefineParams p;
  for (auto _ : state) {
    benchmark::DoNotOptimize(segment_graph(build_cell_grid(scene().image, p), p.k, p.min_size));
  }
}
BENCHMARK(BM_Segmentation)->Unit(benchmark::kMillisecond);

void BM_Scan(benchmark::State& state) {
  const GrayImage gray = to_gray(scene().image);
  model();
  for (auto _ : state) benchmark::DoNotOptimize(scan(gray, model()));
}
BENCHMARK(BM_Scan)->Unit(benchmark::kMillisecond);

void BM_FullPipeline(benchmark::State& state) {
  PipelineConfig cfg;
  model();
  for (auto _ : state) benchmark::DoNotOptimize(run_bingpp(scene().image, model(), cfg));
}
BENCHMARK(BM_FullPipeline)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
