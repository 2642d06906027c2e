#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bingpp/pipeline.hpp"

namespace bingpp::cli {

/// Command-line overrides applied on top of the config file.
struct Overrides {
  std::string config_path;
  std::string model_path;
  std::optional<int> max_proposals;
  std::optional<double> eta;
  std::vector<double> gamma;
  std::optional<int> iters;
  std::optional<double> epsilon;
  std::vector<double> delta;
  std::optional<double> nms_rho;
  bool no_edge = false;
  bool no_seg = false;
  std::optional<double> seg_k;
  std::optional<int> min_size;
  std::optional<int> threads;
  std::optional<std::uint64_t> seed;
};

PipelineConfig resolve_config(const Overrides& o);

/// Images from a single file or every .ppm/.pgm file in a directory, sorted
/// by file name. The id is the file stem.
std::vector<NamedImage> load_images(const std::string& path);

struct ProposeArgs {
  std::string input;
  std::string out;
};
int cmd_propose(const Overrides& o, const ProposeArgs& a);

struct EvalArgs {
  std::string proposals;
  std::string gt;
  std::string out;
  std::string curve_out;
  bool exclude_difficult = false;
};
int cmd_eval(const Overrides& o, const EvalArgs& a);

struct LearnArgs {
  std::string input;
  std::string gt;
  std::string out;
  std::string gamma_trace;
  std::string delta_table;
};
int cmd_learn(const Overrides& o, const LearnArgs& a);

struct BenchArgs {
  std::string input;
  std::string out;
  int repeats = 1;
};
int cmd_bench(const Overrides& o, const BenchArgs& a);

struct TrainArgs {
  std::string input;
  std::string gt;
  std::string out;
  int n_w = 2;
  int n_g = 4;
  int negatives = 100;
};
int cmd_train(const Overrides& o, const TrainArgs& a);

struct SynthArgs {
  std::string out;
  int count = 10;
  int min_objects = 3;
  int max_objects = 6;
  int width = 640;
  int height = 480;
};
int cmd_synth(const Overrides& o, const SynthArgs& a);

}  // namespace bingpp::cli
