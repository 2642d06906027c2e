#include <algorithm>
#include <cstdio>
#include <set>

#include <json.hpp>

#include "bingpp/error.hpp"
#include "bingpp/evaluation.hpp"

namespace bingpp {

namespace {

std::string format_key(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

const std::vector<Proposal>* find_image(const ProposalsByImage& props, const std::string& id) {
  const auto it = props.find(id);
  return it == props.end() ? nullptr : &it->second;
}

}  // namespace

std::vector<Proposal> top_k(std::span<const Proposal> props, std::size_t k) {
  std::vector<Proposal> sorted(props.begin(), props.end());
  sort_by_score(sorted);
  if (sorted.size() > k) sorted.resize(k);
  return sorted;
}

double best_overlap(const GroundTruth& gt, std::span<const Proposal> props) noexcept {
  double best = 0;
  for (const Proposal& p : props) best = std::max(best, iou(p.box, gt.box));
  return best;
}

std::vector<double> best_overlaps(std::span<const GroundTruth> gts, const ProposalsByImage& props, std::size_t k) {
  std::map<std::string, std::vector<Proposal>> truncated;
  std::vector<double> out;
  out.reserve(gts.size());
  for (const GroundTruth& gt : gts) {
    auto it = truncated.find(gt.image_id);
    if (it == truncated.end()) {
      const auto* all = find_image(props, gt.image_id);
      it = truncated.emplace(gt.image_id, all ? top_k(*all, k) : std::vector<Proposal>{}).first;
    }
    out.push_back(best_overlap(gt, it->second));
  }
  return out;
}

double detection_recall(std::span<const GroundTruth> gts, const ProposalsByImage& props, double eta, std::size_t k) {
  if (gts.empty()) return 0.0;
  const auto bo = best_overlaps(gts, props, k);
  const auto hits = std::count_if(bo.begin(), bo.end(), [&](double v) { return v >= eta; });
  return static_cast<double>(hits) / static_cast<double>(gts.size());
}

namespace {

AboMabo abo_from_bo(std::span<const GroundTruth> gts, const std::vector<double>& bo) {
  std::map<std::string, std::pair<double, std::size_t>> acc;
  for (std::size_t i = 0; i < gts.size(); ++i) {
    auto& [sum, count] = acc[gts[i].class_name];
    sum += bo[i];
    ++count;
  }
  AboMabo out;
  double total = 0;
  for (const auto& [name, entry] : acc) {
    const double abo = entry.first / static_cast<double>(entry.second);
    out.abo[name] = abo;
    total += abo;
  }
  out.mabo = acc.empty() ? 0.0 : total / static_cast<double>(acc.size());
  return out;
}

}  // namespace

AboMabo abo_mabo(std::span<const GroundTruth> gts, const ProposalsByImage& props, std::size_t k) {
  if (gts.empty()) throw Error(ErrorCode::kNoGroundTruth, "ABO needs at least one ground truth");
  return abo_from_bo(gts, best_overlaps(gts, props, k));
}

std::vector<std::pair<double, double>> recall_overlap_curve(std::span<const GroundTruth> gts,
                                                            const ProposalsByImage& props, std::size_t k,
                                                            std::span<const double> eta_grid) {
  if (!std::is_sorted(eta_grid.begin(), eta_grid.end())) {
    throw Error(ErrorCode::kInvalidArgument, "eta grid must be ascending");
  }
  const auto bo = best_overlaps(gts, props, k);
  std::vector<std::pair<double, double>> curve;
  for (const double eta : eta_grid) {
    const auto hits = std::count_if(bo.begin(), bo.end(), [&](double v) { return v >= eta; });
    curve.emplace_back(eta, gts.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(gts.size()));
  }
  return curve;
}

std::vector<double> EvalParams::default_curve_grid() {
  std::vector<double> grid;
  for (int i = 10; i <= 20; ++i) grid.push_back(i / 20.0);
  return grid;
}

MetricsReport evaluate(std::span<const GroundTruth> all_gts, const ProposalsByImage& props, const EvalParams& params) {
  std::vector<GroundTruth> gts;
  for (const GroundTruth& gt : all_gts) {
    if (params.include_difficult || !gt.difficult) gts.push_back(gt);
  }
  if (gts.empty()) throw Error(ErrorCode::kNoGroundTruth, "no ground truth to evaluate");

  MetricsReport report;
  for (const std::size_t k : params.budgets) {
    const auto bo = best_overlaps(gts, props, k);
    for (const double eta : params.etas) {
      const auto hits = std::count_if(bo.begin(), bo.end(), [&](double v) { return v >= eta; });
      report.dr.push_back({eta, k, static_cast<double>(hits) / static_cast<double>(gts.size())});
    }
  }
  std::stable_sort(report.dr.begin(), report.dr.end(), [](const DrEntry& a, const DrEntry& b) {
    return a.eta != b.eta ? a.eta < b.eta : a.budget < b.budget;
  });

  report.bo = best_overlaps(gts, props, params.abo_budget);
  const AboMabo am = abo_from_bo(gts, report.bo);
  report.abo = am.abo;
  report.mabo = am.mabo;
  report.curve = recall_overlap_curve(gts, props, params.abo_budget, params.curve_grid);
  report.objects = gts.size();
  std::set<std::string> images;
  for (const GroundTruth& gt : gts) images.insert(gt.image_id);
  report.images = images.size();
  return report;
}

std::string report_to_json(const MetricsReport& report) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json dr = nlohmann::ordered_json::object();
  for (const DrEntry& e : report.dr) dr[format_key(e.eta)][std::to_string(e.budget)] = e.dr;
  j["dr"] = std::move(dr);
  j["abo"] = report.abo;
  j["mabo"] = report.mabo;
  nlohmann::ordered_json curve = nlohmann::ordered_json::array();
  for (const auto& [eta, recall] : report.curve) curve.push_back({eta, recall});
  j["curve"] = std::move(curve);
  j["objects"] = report.objects;
  j["images"] = report.images;
  return j.dump(2) + "\n";
}

std::string curve_to_csv(const MetricsReport& report) {
  std::string out = "eta,recall\n";
  char buf[64];
  for (const auto& [eta, recall] : report.curve) {
    std::snprintf(buf, sizeof buf, "%.2f,%.6f\n", eta, recall);
    out += buf;
  }
  return out;
}

}  // namespace bingpp
