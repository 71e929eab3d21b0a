#pragma once

#include <optional>
#include <string>
#include <vector>

#include "o2s/geometry.hpp"
#include "o2s/ingestion.hpp"
#include "o2s/random.hpp"
#include "o2s/scene.hpp"

namespace o2s {

/// Per-cell maximum point height over a square grid around a region center.
/// Empty cells hold floor_z and no cell is ever below it.
class HeightMap {
 public:
  HeightMap(Vec2 origin, double cell_size, std::size_t width, std::size_t depth, double floor_z);

  const Vec2& origin() const { return origin_; }
  double cell_size() const { return cell_size_; }
  std::size_t width() const { return width_; }
  std::size_t depth() const { return depth_; }
  double floor_z() const { return floor_z_; }

  double at(std::size_t ix, std::size_t iy) const { return cells_[iy * width_ + ix]; }
  /// Cell containing (x, y), nullopt outside the grid.
  std::optional<std::pair<std::size_t, std::size_t>> cell_of(double x, double y) const;
  Vec2 cell_center(std::size_t ix, std::size_t iy) const;

  /// Raises the cell under p to p.z if higher.
  void add_point(const Vec3& p);
  /// Maximum over cells whose centers fall in the footprint, plus the cell
  /// under the box center. Cells outside the grid are ignored.
  double max_under(const Box3& footprint) const;

 private:
  Vec2 origin_;
  double cell_size_;
  std::size_t width_;
  std::size_t depth_;
  double floor_z_;
  std::vector<double> cells_;
};

inline constexpr double kSupportEpsilon = 0.01;

struct Placement {
  Vec3 centroid;  // center of the target's box after placement
  double heading = 0.0;
  double support_surface_z = 0.0;
  std::optional<std::string> supported_by;  // nullopt = ground plane

  bool on_ground() const { return !supported_by.has_value(); }
  friend bool operator==(const Placement&, const Placement&) = default;
};

struct InsertionConfig {
  double region_half_extent = 1.0;
  double cell_size = 0.05;
  int max_tries = 32;
  double collision_margin = 0.01;
  bool allow_on_ground_supportee = true;
  bool random_heading = true;
  // Height tolerance when matching a support surface to the floor or a box top.
  double surface_tolerance = 0.03;
  // Fresh anchor/target pairs tried per requested insertion.
  int retry_budget = 4;
  bool augment_targets = true;
  AugmentConfig augment;
  NormalizeOptions normalize;

  /// Throws InvalidConfig.
  void validate() const;
};

enum class ValidityFailure { None, RoleViolation, Collision, Unsupported, OutOfBounds };
std::string_view to_string(ValidityFailure f);

struct ValidityReport {
  bool valid = true;
  ValidityFailure reason = ValidityFailure::None;
  std::string detail;
};

struct InsertionRecord {
  std::string anchor_id;
  std::string asset_id;
  ObjectAnnotation target;
  Placement placement;
  friend bool operator==(const InsertionRecord&, const InsertionRecord&) = default;
};

/// Uniform choice among seen-category annotations. Throws NoAnchorAvailable.
const ObjectAnnotation& select_anchor(const Scene& scene, const BenchmarkSplit& split, RandomStream& rng);

/// Uniform choice among assets outside the anchor's category. Throws NoTargetAvailable.
const ObjectAsset& select_target(const AssetBank& bank, const std::string& anchor_category, RandomStream& rng);

HeightMap build_height_map(const Scene& scene, Vec2 region_center, double half_extent, double cell_size);

/// Role rule on the resolved supporter plus box collision against every
/// existing object except the supporter. `anchor_role` does not constrain
/// the outcome; it is accepted for callers that track it.
ValidityReport check_physical_validity(SupportRole target_role, SupportRole anchor_role,
                                       const Placement& placement, const Scene& scene,
                                       const Box3& target_box, const InsertionConfig& cfg);

/// Box the target occupies at `placement`.
Box3 placed_box(const ObjectAsset& target, const Placement& placement);

/// Throws PlacementFailed after cfg.max_tries rejected candidates.
Placement sample_placement(const Scene& scene, const ObjectAnnotation& anchor, const ObjectAsset& target,
                           SupportRole target_role, const InsertionConfig& cfg, RandomStream& rng);

struct InsertResult {
  Scene scene;
  ObjectAnnotation annotation;
};

/// Returns a new scene with the target's points appended (rotated by the
/// placement heading about the box center, then translated).
InsertResult insert_object(const Scene& scene, const ObjectAsset& target, SupportRole target_role,
                           const Placement& placement);

struct AugmentResult {
  Scene scene;
  std::vector<InsertionRecord> records;
  int failed_attempts = 0;
};

/// k_inserts rounds of anchor -> target -> normalize -> place -> insert.
/// Throws AugmentationFailed when nothing could be inserted.
AugmentResult augment_scene(const Scene& scene, const AssetBank& bank, const CategoryTable& table,
                            const BenchmarkSplit& split, const InsertionConfig& cfg, int k_inserts,
                            RandomStream& rng);

}  // namespace o2s
