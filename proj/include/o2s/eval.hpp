#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "o2s/geometry.hpp"
#include "o2s/ingestion.hpp"

namespace o2s {

struct Detection {
  std::string scene_id;
  std::string category;
  Box3 box;
  double score = 0.0;
};

struct GroundTruth {
  std::string scene_id;
  std::string category;
  Box3 box;
};

enum class IouMode { AxisAligned, Oriented };
enum class Interpolation { AllPoint, ElevenPoint };

inline constexpr double kDefaultIouThreshold = 0.25;

/// TP/FP flag per detection, in input order. Detections are visited by
/// descending score (stable on ties) and each takes the unmatched GT with
/// the highest IoU at or above the threshold.
std::vector<bool> match_detections(const std::vector<Detection>& dets, const std::vector<GroundTruth>& gts,
                                   double iou_threshold, IouMode mode);

struct RankedFlag {
  double score = 0.0;
  bool tp = false;
};

/// Area under the precision envelope. nullopt when num_gt is 0.
std::optional<double> average_precision(std::vector<RankedFlag> flags, std::size_t num_gt,
                                        Interpolation interp = Interpolation::AllPoint);

struct CategoryResult {
  std::optional<double> ap;
  std::size_t num_gt = 0;
  std::size_t num_detections = 0;
  std::size_t num_matched = 0;
};

struct EvalReport {
  double iou_threshold = kDefaultIouThreshold;
  std::map<std::string, CategoryResult> per_category;
  std::optional<double> mean_ap;               // over unseen categories present in GT
  std::vector<std::string> mean_ap_categories;
};

struct EvalOptions {
  double iou_threshold = kDefaultIouThreshold;
  IouMode iou_mode = IouMode::AxisAligned;
  Interpolation interp = Interpolation::AllPoint;
};

/// Pools detections across scenes per category. Throws EmptyInput when
/// there is no ground truth at all.
EvalReport evaluate(const std::vector<Detection>& dets, const std::vector<GroundTruth>& gts,
                    const BenchmarkSplit& split, const EvalOptions& options = {});

struct FrequencySplit {
  std::vector<std::string> head;
  std::vector<std::string> common;
  std::vector<std::string> tail;

  /// Head categories seen, common and tail unseen.
  BenchmarkSplit as_benchmark(std::string name = "OV-ScanNet200") const;
};

/// Ranks 200 categories by descending count (ties lexicographic) into
/// 66 head / 68 common / 66 tail. Throws InvalidConfig for any other size.
FrequencySplit scannet200_split(const std::vector<std::pair<std::string, long>>& category_frequencies);

}  // namespace o2s
