#include "o2s/eval.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "o2s/error.hpp"

namespace o2s {
namespace {

double iou(const Box3& a, const Box3& b, IouMode mode) {
  return mode == IouMode::AxisAligned ? iou3d_axis_aligned(a, b) : iou3d_oriented(a, b);
}

std::vector<std::size_t> rank_by_score(const std::vector<double>& scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

}  // namespace

std::vector<bool> match_detections(const std::vector<Detection>& dets, const std::vector<GroundTruth>& gts,
                                   double iou_threshold, IouMode mode) {
  std::vector<double> scores;
  scores.reserve(dets.size());
  for (const auto& d : dets) scores.push_back(d.score);
  std::vector<bool> tp(dets.size(), false);
  std::vector<bool> taken(gts.size(), false);
  for (std::size_t di : rank_by_score(scores)) {
    double best = -1.0;
    std::size_t best_gt = gts.size();
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (taken[g]) continue;
      const double v = iou(dets[di].box, gts[g].box, mode);
      if (v >= iou_threshold && v > best) {
        best = v;
        best_gt = g;
      }
    }
    if (best_gt < gts.size()) {
      taken[best_gt] = true;
      tp[di] = true;
    }
  }
  return tp;
}

std::optional<double> average_precision(std::vector<RankedFlag> flags, std::size_t num_gt, Interpolation interp) {
  if (num_gt == 0) return std::nullopt;
  if (flags.empty()) return 0.0;
  std::stable_sort(flags.begin(), flags.end(), [](const RankedFlag& a, const RankedFlag& b) { return a.score > b.score; });

  std::vector<double> recall(flags.size());
  std::vector<double> precision(flags.size());
  std::size_t tp = 0;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    if (flags[i].tp) ++tp;
    recall[i] = static_cast<double>(tp) / static_cast<double>(num_gt);
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
  }

  if (interp == Interpolation::ElevenPoint) {
    double sum = 0.0;
    for (int t = 0; t <= 10; ++t) {
      const double r = t / 10.0;
      double p = 0.0;
      for (std::size_t i = 0; i < flags.size(); ++i) {
        if (recall[i] >= r) p = std::max(p, precision[i]);
      }
      sum += p;
    }
    return sum / 11.0;
  }

  // Precision envelope, then sum over recall steps.
  for (std::size_t i = flags.size() - 1; i-- > 0;) precision[i] = std::max(precision[i], precision[i + 1]);
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    ap += (recall[i] - prev_recall) * precision[i];
    prev_recall = recall[i];
  }
  return ap;
}

EvalReport evaluate(const std::vector<Detection>& dets, const std::vector<GroundTruth>& gts,
                    const BenchmarkSplit& split, const EvalOptions& options) {
  if (gts.empty()) throw Error(ErrorCode::EmptyInput, "no ground truth boxes");

  // category -> scene -> indices
  std::map<std::string, std::map<std::string, std::vector<std::size_t>>> det_groups;
  std::map<std::string, std::map<std::string, std::vector<std::size_t>>> gt_groups;
  for (std::size_t i = 0; i < dets.size(); ++i) det_groups[dets[i].category][dets[i].scene_id].push_back(i);
  for (std::size_t i = 0; i < gts.size(); ++i) gt_groups[gts[i].category][gts[i].scene_id].push_back(i);

  std::set<std::string> categories;
  for (const auto& [c, _] : det_groups) categories.insert(c);
  for (const auto& [c, _] : gt_groups) categories.insert(c);

  EvalReport report;
  report.iou_threshold = options.iou_threshold;
  for (const auto& c : categories) {
    CategoryResult res;
    std::vector<RankedFlag> flags;
    std::set<std::string> scenes;
    for (const auto& [s, _] : det_groups[c]) scenes.insert(s);
    for (const auto& [s, idx] : gt_groups[c]) {
      scenes.insert(s);
      res.num_gt += idx.size();
    }
    for (const auto& s : scenes) {
      std::vector<Detection> sd;
      std::vector<GroundTruth> sg;
      for (auto i : det_groups[c][s]) sd.push_back(dets[i]);
      for (auto i : gt_groups[c][s]) sg.push_back(gts[i]);
      const auto tp = match_detections(sd, sg, options.iou_threshold, options.iou_mode);
      for (std::size_t i = 0; i < sd.size(); ++i) {
        flags.push_back({sd[i].score, tp[i]});
        if (tp[i]) ++res.num_matched;
      }
      res.num_detections += sd.size();
    }
    res.ap = average_precision(std::move(flags), res.num_gt, options.interp);
    report.per_category[c] = res;
  }

  double sum = 0.0;
  for (const auto& c : split.unseen) {
    const auto it = report.per_category.find(c);
    if (it == report.per_category.end() || !it->second.ap) continue;
    sum += *it->second.ap;
    report.mean_ap_categories.push_back(c);
  }
  if (!report.mean_ap_categories.empty()) {
    report.mean_ap = sum / static_cast<double>(report.mean_ap_categories.size());
  }
  return report;
}

BenchmarkSplit FrequencySplit::as_benchmark(std::string name) const {
  BenchmarkSplit s;
  s.name = std::move(name);
  s.seen = head;
  s.unseen = common;
  s.unseen.insert(s.unseen.end(), tail.begin(), tail.end());
  return s;
}

FrequencySplit scannet200_split(const std::vector<std::pair<std::string, long>>& category_frequencies) {
  if (category_frequencies.size() != 200) {
    throw Error(ErrorCode::InvalidConfig,
                "expected 200 categories, got " + std::to_string(category_frequencies.size()));
  }
  auto ranked = category_frequencies;
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  FrequencySplit out;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    auto& bucket = i < 66 ? out.head : (i < 134 ? out.common : out.tail);
    bucket.push_back(ranked[i].first);
  }
  return out;
}

}  // namespace o2s
