#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bingpp/error.hpp"
#include "bingpp/pipeline.hpp"

namespace bingpp {

namespace {

using nlohmann::json;

template <typename T>
void read_key(const json& j, const char* key, T& out) {
  if (const auto it = j.find(key); it != j.end()) out = it->get<T>();
}

}  // namespace

PipelineConfig config_from_json(const std::string& text) {
  PipelineConfig cfg;
  try {
    const json j = json::parse(text);
    if (!j.is_object()) throw Error(ErrorCode::kInvalidArgument, "config must be a JSON object");
    read_key(j, "model", cfg.model_path);
    read_key(j, "max_proposals", cfg.max_proposals);
    read_key(j, "nms_rho", cfg.nms_rho);
    read_key(j, "enable_edge", cfg.enable_edge);
    read_key(j, "enable_seg", cfg.enable_seg);
    read_key(j, "seg_first", cfg.seg_first);
    read_key(j, "eta", cfg.eval_eta);
    read_key(j, "threads", cfg.threads);
    read_key(j, "seed", cfg.seed);
    if (const auto it = j.find("scan"); it != j.end()) {
      read_key(*it, "per_size_keep", cfg.scan.per_size_keep);
      read_key(*it, "total_keep", cfg.scan.total_keep);
      read_key(*it, "per_size_nms", cfg.scan.per_size_nms);
    }
    if (const auto it = j.find("edge"); it != j.end()) {
      if (const auto g = it->find("gamma"); g != it->end()) {
        cfg.edge.gamma = g->is_array() ? g->get<std::vector<double>>() : std::vector<double>{g->get<double>()};
      }
      read_key(*it, "iters", cfg.edge.max_iters);
      read_key(*it, "epsilon", cfg.edge.epsilon);
      read_key(*it, "resize", cfg.edge.resize_factor);
      read_key(*it, "range_index", cfg.edge.range_index);
      read_key(*it, "canny_sigma", cfg.canny.sigma);
      read_key(*it, "canny_low", cfg.canny.low);
      read_key(*it, "canny_high", cfg.canny.high);
    }
    if (const auto it = j.find("seg"); it != j.end()) {
      read_key(*it, "delta", cfg.seg.delta_set);
      read_key(*it, "k", cfg.seg.k);
      read_key(*it, "min_size", cfg.seg.min_size);
      read_key(*it, "frame_width", cfg.seg.frame_width);
      read_key(*it, "frame_height", cfg.seg.frame_height);
      read_key(*it, "cell", cfg.seg.cell_px);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

std::string config_to_json(const PipelineConfig& cfg) {
  nlohmann::ordered_json j;
  j["model"] = cfg.model_path;
  j["max_proposals"] = cfg.max_proposals;
  j["nms_rho"] = cfg.nms_rho;
  j["enable_edge"] = cfg.enable_edge;
  j["enable_seg"] = cfg.enable_seg;
  j["seg_first"] = cfg.seg_first;
  j["eta"] = cfg.eval_eta;
  j["threads"] = cfg.threads;
  j["seed"] = cfg.seed;
  j["scan"] = {{"per_size_keep", cfg.scan.per_size_keep},
               {"total_keep", cfg.scan.total_keep},
               {"per_size_nms", cfg.scan.per_size_nms}};
  j["edge"] = {{"gamma", cfg.edge.gamma},         {"iters", cfg.edge.max_iters},
               {"epsilon", cfg.edge.epsilon},     {"resize", cfg.edge.resize_factor},
               {"range_index", cfg.edge.range_index},
               {"canny_sigma", cfg.canny.sigma},  {"canny_low", cfg.canny.low},
               {"canny_high", cfg.canny.high}};
  j["seg"] = {{"delta", cfg.seg.delta_set},
              {"k", cfg.seg.k},
              {"min_size", cfg.seg.min_size},
              {"frame_width", cfg.seg.frame_width},
              {"frame_height", cfg.seg.frame_height},
              {"cell", cfg.seg.cell_px}};
  return j.dump(2) + "\n";
}

PipelineConfig read_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

}  // namespace bingpp
