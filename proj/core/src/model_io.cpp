#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bingpp/bing.hpp"
#include "bingpp/error.hpp"

namespace bingpp {

namespace {

using nlohmann::json;

std::string to_hex16(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t from_hex16(const std::string& s) {
  if (s.size() != 16) throw Error(ErrorCode::kMalformedModelFile, "a_plus must be 16 hex digits");
  std::uint64_t v = 0;
  for (const char c : s) {
    v <<= 4;
    if (c >= '0' && c <= '9') v |= static_cast<std::uint64_t>(c - '0');
    else if (c >= 'a' && c <= 'f') v |= static_cast<std::uint64_t>(c - 'a' + 10);
    else if (c >= 'A' && c <= 'F') v |= static_cast<std::uint64_t>(c - 'A' + 10);
    else throw Error(ErrorCode::kMalformedModelFile, "a_plus has a non-hex digit");
  }
  return v;
}

const json& require(const json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw Error(ErrorCode::kMalformedModelFile, std::string("missing \"") + key + "\"");
  return *it;
}

}  // namespace

std::string model_to_json(const BinarizedModel& model) {
  json j;
  j["w"] = model.w;
  json basis = json::array();
  for (const BasisVector& b : model.basis) basis.push_back({{"a_plus", to_hex16(b.a_plus)}, {"beta", b.beta}});
  j["basis"] = std::move(basis);
  j["n_g"] = model.n_g;
  json sizes = json::array();
  for (const WindowSize& s : model.sizes) sizes.push_back({s.width, s.height});
  j["sizes"] = std::move(sizes);
  json calib = json::array();
  for (const Calibration& c : model.calib) calib.push_back({c.v, c.t});
  j["calib"] = std::move(calib);
  return j.dump(2) + "\n";
}

BinarizedModel model_from_json(const std::string& text) {
  BinarizedModel m;
  try {
    const json j = json::parse(text);
    if (!j.is_object()) throw Error(ErrorCode::kMalformedModelFile, "model file must hold a JSON object");

    const json& w = require(j, "w");
    if (!w.is_array() || w.size() != kFeatureDim) throw Error(ErrorCode::kMalformedModelFile, "\"w\" must hold 64 numbers");
    for (int i = 0; i < kFeatureDim; ++i) m.w[i] = w[i].get<double>();

    for (const json& b : require(j, "basis")) {
      m.basis.push_back({from_hex16(require(b, "a_plus").get<std::string>()), require(b, "beta").get<double>()});
    }
    m.n_g = require(j, "n_g").get<int>();
    for (const json& s : require(j, "sizes")) {
      if (!s.is_array() || s.size() != 2) throw Error(ErrorCode::kMalformedModelFile, "size entries are [w, h]");
      m.sizes.push_back({s[0].get<int>(), s[1].get<int>()});
    }
    for (const json& c : require(j, "calib")) {
      if (!c.is_array() || c.size() != 2) throw Error(ErrorCode::kMalformedModelFile, "calib entries are [v, t]");
      m.calib.push_back({c[0].get<double>(), c[1].get<double>()});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedModelFile, e.what());
  }
  m.validate();
  return m;
}

BinarizedModel read_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kModelMissing, "cannot open model " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str());
}

void write_model(const std::string& path, const BinarizedModel& model) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << model_to_json(model);
}

}  // namespace bingpp
