#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "o2s/geometry.hpp"
#include "o2s/random.hpp"
#include "o2s/scene.hpp"

namespace o2s {

/// A single object in canonical pose: +z up, centroid at the origin, heading 0.
class ObjectAsset {
 public:
  ObjectAsset(std::string asset_id, std::string category, std::string source, PointCloud cloud);

  const std::string& asset_id() const { return asset_id_; }
  const std::string& category() const { return category_; }
  const std::string& source() const { return source_; }
  const PointCloud& cloud() const { return cloud_; }
  const Vec3& canonical_extent() const { return extent_; }
  /// Center of the heading-0 bounding box (not necessarily the centroid).
  const Vec3& box_center() const { return box_center_; }

  friend bool operator==(const ObjectAsset&, const ObjectAsset&) = default;

 private:
  std::string asset_id_;
  std::string category_;
  std::string source_;
  PointCloud cloud_;
  Vec3 extent_;
  Vec3 box_center_;
};

/// Shifts the cloud so its centroid is at the origin.
PointCloud center_at_centroid(PointCloud cloud);

class AssetBank {
 public:
  /// Throws EmptyInput for an empty list, InvalidConfig for duplicate ids.
  explicit AssetBank(std::vector<ObjectAsset> assets);

  const std::vector<ObjectAsset>& assets() const { return assets_; }
  const std::map<std::string, std::vector<std::size_t>>& by_category() const { return by_category_; }
  const std::set<std::string>& sources() const { return sources_; }
  const ObjectAsset* find(const std::string& asset_id) const;

  friend bool operator==(const AssetBank& a, const AssetBank& b) { return a.assets_ == b.assets_; }

 private:
  std::vector<ObjectAsset> assets_;
  std::map<std::string, std::vector<std::size_t>> by_category_;
  std::set<std::string> sources_;
};

enum class CategorySplit { Seen, Unseen };

struct BenchmarkSplit {
  std::string name;
  std::vector<std::string> seen;
  std::vector<std::string> unseen;
  // Optional per-category metadata carried by split files.
  std::map<std::string, SupportRole> roles;
  std::map<std::string, std::string> similar;

  bool is_seen(const std::string& category) const;
  bool is_unseen(const std::string& category) const;
  /// Throws InvalidConfig if seen and unseen intersect or a similar mapping
  /// points to a non-seen category.
  void validate() const;
};

struct CategoryInfo {
  CategorySplit split = CategorySplit::Unseen;
  SupportRole role = SupportRole::Stander;
  std::optional<std::string> similar_seen_category;
  std::optional<Vec3> avg_size;
  std::optional<long> avg_point_count;

  bool has_stats() const { return avg_size.has_value() && avg_point_count.has_value(); }
  friend bool operator==(const CategoryInfo&, const CategoryInfo&) = default;
};

inline constexpr long kDefaultPointCount = 1024;

struct CategoryTable {
  std::map<std::string, CategoryInfo> categories;
  long default_point_count = kDefaultPointCount;

  const CategoryInfo* find(const std::string& category) const;
  /// Role from the table, else the built-in catalog, else Stander.
  SupportRole role_of(const std::string& category) const;
  /// Stats for the category itself or its similar seen category.
  const CategoryInfo* stats_for(const std::string& category) const;

  friend bool operator==(const CategoryTable&, const CategoryTable&) = default;
};

/// Averages box sizes and in-box point counts per seen category. Throws
/// MissingCategoryStats listing every seen category without instances.
CategoryTable compute_category_stats(const std::vector<Scene>& scenes, const BenchmarkSplit& split);

/// Number of cloud points inside the box (boundary inclusive).
long count_points_in_box(const PointCloud& cloud, const Box3& box);

enum class ResampleOrder { ScaleThenResample, ResampleThenScale };

struct NormalizeOptions {
  ResampleOrder order = ResampleOrder::ScaleThenResample;
  double upsample_jitter = 0.005;
};

/// Isotropic scale that maps the asset's extent diagonal onto the average
/// size diagonal of its (similar) category; 1 when no stats exist.
double normalization_scale(const ObjectAsset& asset, const CategoryTable& table);

ObjectAsset normalize_and_resample(const ObjectAsset& asset, const CategoryTable& table,
                                   RandomStream& rng, const NormalizeOptions& options = {});

/// Exactly `count` points: a random subset without replacement when
/// shrinking; all originals plus jittered copies (within `jitter` metres of
/// their source) when growing.
PointCloud resample_points(const PointCloud& cloud, std::size_t count, RandomStream& rng,
                           double jitter);

struct AugmentConfig {
  double yaw_range = std::numbers::pi;  // yaw drawn from [-range, range]
  double drop_ratio = 0.1;
  double jitter_sigma = 0.005;          // clamped at 3 sigma
};

/// Yaw about the centroid, independent point dropping, clamped Gaussian
/// jitter. At least one point survives. InvalidConfig for drop ratio
/// outside [0, 1).
PointCloud augment_points(const PointCloud& cloud, RandomStream& rng, const AugmentConfig& config);

// File loading; schemas live in io.hpp.
AssetBank load_asset_bank(const std::filesystem::path& manifest_path);
std::vector<Scene> load_scenes(const std::filesystem::path& dir);

}  // namespace o2s
