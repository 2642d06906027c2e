#include <cstdio>
#include <exception>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "bingpp/error.hpp"
#include "commands.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

void add_pipeline_options(CLI::App* cmd, bingpp::cli::Overrides& o) {
  cmd->add_option("--config", o.config_path, "Pipeline config JSON")->check(CLI::ExistingFile);
  cmd->add_option("--model", o.model_path, "Trained model JSON");
  cmd->add_option("--max-proposals", o.max_proposals, "Proposals kept per image");
  cmd->add_option("--eta", o.eta, "IoU threshold for recall and learning");
  cmd->add_option("--gamma", o.gamma, "Edge blend weight per iteration (last repeats)")->delimiter(',');
  cmd->add_option("--iters", o.iters, "Edge refinement iterations");
  cmd->add_option("--epsilon", o.epsilon, "Early-stop IoU for edge refinement");
  cmd->add_option("--delta", o.delta, "Segment overlap thresholds")->delimiter(',');
  cmd->add_option("--nms-rho", o.nms_rho, "Final NMS IoU threshold");
  cmd->add_flag("--no-edge", o.no_edge, "Disable the edge stage");
  cmd->add_flag("--no-seg", o.no_seg, "Disable the segment stage");
  cmd->add_option("--seg-k", o.seg_k, "Segmentation scale parameter k");
  cmd->add_option("--min-size", o.min_size, "Minimum segment size in cells");
  cmd->add_option("--threads", o.threads, "Worker threads");
  cmd->add_option("--seed", o.seed, "Random seed");
}

}  // namespace

int main(int argc, char** argv) {
  namespace cli = bingpp::cli;
  CLI::App app{"bingpp: object proposals with edge and segment box refinement"};
  app.require_subcommand(1);
  spdlog::set_pattern("[%l] %v");

  cli::Overrides o;

  cli::ProposeArgs propose;
  auto* p = app.add_subcommand("propose", "Generate proposals for images");
  add_pipeline_options(p, o);
  p->add_option("--input", propose.input, "Image file or directory")->required();
  p->add_option("--out", propose.out, "Proposals CSV")->required();

  cli::EvalArgs eval;
  auto* e = app.add_subcommand("eval", "Score proposals against ground truth");
  add_pipeline_options(e, o);
  e->add_option("--input,--proposals", eval.proposals, "Proposals CSV")->required();
  e->add_option("--gt", eval.gt, "Ground truth: .jsonl, VOC .xml, or a directory of .xml")->required();
  e->add_option("--out", eval.out, "Metrics JSON")->required();
  e->add_option("--curve", eval.curve_out, "Recall-vs-IoU CSV");
  e->add_flag("--exclude-difficult", eval.exclude_difficult, "Skip objects flagged difficult");

  cli::LearnArgs learn;
  auto* l = app.add_subcommand("learn", "Learn the gamma sequence and delta set");
  add_pipeline_options(l, o);
  l->add_option("--input", learn.input, "Image file or directory")->required();
  l->add_option("--gt", learn.gt, "Ground truth")->required();
  l->add_option("--out", learn.out, "Learned parameters JSON")->required();
  l->add_option("--gamma-trace", learn.gamma_trace, "Per-iteration gamma loss CSV");
  l->add_option("--delta-table", learn.delta_table, "511-row delta subset CSV");

  cli::BenchArgs bench;
  auto* b = app.add_subcommand("bench", "Time the pipeline stages");
  add_pipeline_options(b, o);
  b->add_option("--input", bench.input, "Image file or directory")->required();
  b->add_option("--out", bench.out, "Per-image timing CSV");
  b->add_option("--repeats", bench.repeats, "Runs per mode; the fastest is reported");

  cli::TrainArgs train;
  auto* t = app.add_subcommand("train", "Train a scoring model");
  add_pipeline_options(t, o);
  t->add_option("--input", train.input, "Image file or directory")->required();
  t->add_option("--gt", train.gt, "Ground truth")->required();
  t->add_option("--out", train.out, "Model JSON")->required();
  t->add_option("--n-w", train.n_w, "Binary basis vectors");
  t->add_option("--n-g", train.n_g, "Bit planes used for scoring");
  t->add_option("--negatives", train.negatives, "Random negatives per image");

  cli::SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Write synthetic scenes with ground truth");
  add_pipeline_options(s, o);
  s->add_option("--out", synth.out, "Output directory")->required();
  s->add_option("--count", synth.count, "Number of scenes");
  s->add_option("--min-objects", synth.min_objects, "Fewest rectangles per scene");
  s->add_option("--max-objects", synth.max_objects, "Most rectangles per scene");
  s->add_option("--width", synth.width, "Scene width");
  s->add_option("--height", synth.height, "Scene height");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*p) return cli::cmd_propose(o, propose);
    if (*e) return cli::cmd_eval(o, eval);
    if (*l) return cli::cmd_learn(o, learn);
    if (*b) return cli::cmd_bench(o, bench);
    if (*t) return cli::cmd_train(o, train);
    if (*s) return cli::cmd_synth(o, synth);
  } catch (const bingpp::Error& err) {
    spdlog::error("{} ({})", err.what(), bingpp::to_string(err.code()));
    return err.code() == bingpp::ErrorCode::kInvalidArgument ? kExitUsage : kExitData;
  } catch (const std::exception& err) {
    spdlog::error("{}", err.what());
    return kExitData;
  }
  return kExitUsage;
}
