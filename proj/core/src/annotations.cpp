#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <json.hpp>

#include "bingpp/error.hpp"
#include "bingpp/evaluation.hpp"

namespace bingpp {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

namespace {

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double coord(const pt::ptree& box, const char* key) {
  const auto v = box.get_optional<double>(key);
  if (!v) throw Error(ErrorCode::kMalformedAnnotation, std::string("bndbox lacks a numeric <") + key + ">");
  return *v;
}

}  // namespace

std::vector<GroundTruth> parse_voc_xml(std::string_view xml, const std::string& fallback_image_id) {
  pt::ptree tree;
  try {
    std::istringstream in{std::string(xml)};
    pt::read_xml(in, tree);
  } catch (const pt::ptree_error& e) {
    throw Error(ErrorCode::kMalformedAnnotation, e.what());
  }
  const auto annotation = tree.get_child_optional("annotation");
  if (!annotation) throw Error(ErrorCode::kMalformedAnnotation, "missing <annotation> root");

  std::string image_id = fallback_image_id;
  if (const auto filename = annotation->get_optional<std::string>("filename")) {
    image_id = fs::path(*filename).stem().string();
  }

  std::vector<GroundTruth> out;
  for (const auto& [tag, node] : *annotation) {
    if (tag != "object") continue;
    GroundTruth gt;
    gt.image_id = image_id;
    gt.class_name = node.get<std::string>("name", "");
    if (gt.class_name.empty()) throw Error(ErrorCode::kMalformedAnnotation, "object without <name>");
    gt.difficult = node.get<int>("difficult", 0) != 0;
    const auto box = node.get_child_optional("bndbox");
    if (!box) throw Error(ErrorCode::kMalformedAnnotation, "object \"" + gt.class_name + "\" lacks <bndbox>");
    gt.box = {coord(*box, "xmin"), coord(*box, "ymin"), coord(*box, "xmax") + 1, coord(*box, "ymax") + 1};
    if (!gt.box.valid()) throw Error(ErrorCode::kMalformedAnnotation, "bndbox has max < min");
    out.push_back(std::move(gt));
  }
  return out;
}

std::vector<GroundTruth> parse_gt_jsonl(std::string_view text) {
  std::vector<GroundTruth> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      GroundTruth gt;
      gt.image_id = j.at("image").get<std::string>();
      gt.class_name = j.at("class").get<std::string>();
      const auto& b = j.at("box");
      if (!b.is_array() || b.size() != 4) throw Error(ErrorCode::kMalformedAnnotation, "box must hold 4 numbers");
      gt.box = {b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()};
      gt.difficult = j.value("difficult", false);
      if (!gt.box.valid()) throw Error(ErrorCode::kMalformedAnnotation, "box has x2 < x1 or y2 < y1");
      out.push_back(std::move(gt));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kMalformedAnnotation, "line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(ErrorCode::kMalformedAnnotation, "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::string to_gt_jsonl(std::span<const GroundTruth> gts) {
  std::string out;
  for (const GroundTruth& gt : gts) {
    nlohmann::json j;
    j["image"] = gt.image_id;
    j["class"] = gt.class_name;
    j["box"] = {gt.box.x1, gt.box.y1, gt.box.x2, gt.box.y2};
    if (gt.difficult) j["difficult"] = true;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<GroundTruth> load_ground_truth(const std::string& path) {
  const fs::path p(path);
  if (!fs::exists(p)) throw Error(ErrorCode::kIo, "ground truth not found: " + path);
  if (fs::is_directory(p)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(p)) {
      if (entry.is_regular_file() && entry.path().extension() == ".xml") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<GroundTruth> out;
    for (const fs::path& f : files) {
      auto part = parse_voc_xml(read_text(f), f.stem().string());
      out.insert(out.end(), part.begin(), part.end());
    }
    return out;
  }
  if (p.extension() == ".xml") return parse_voc_xml(read_text(p), p.stem().string());
  return parse_gt_jsonl(read_text(p));
}

}  // namespace bingpp
