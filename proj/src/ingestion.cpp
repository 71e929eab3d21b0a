#include "o2s/ingestion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "o2s/catalog.hpp"
#include "o2s/error.hpp"

namespace o2s {
namespace {

Vec3 centroid_of(const std::vector<Vec3>& pts) {
  Vec3 sum;
  for (const auto& p : pts) sum = sum + p;
  return sum * (1.0 / static_cast<double>(pts.size()));
}

PointCloud scaled(PointCloud cloud, double s) {
  if (s == 1.0) return cloud;
  for (auto& p : cloud.points) p = p * s;
  return cloud;
}

// Sums after sorting so the result does not depend on input order.
double order_free_sum(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  return std::accumulate(values.begin(), values.end(), 0.0);
}

}  // namespace

ObjectAsset::ObjectAsset(std::string asset_id, std::string category, std::string source,
                         PointCloud cloud)
    : asset_id_(std::move(asset_id)),
      category_(std::move(category)),
      source_(std::move(source)),
      cloud_(std::move(cloud)) {
  if (cloud_.empty()) throw Error(ErrorCode::EmptyInput, "asset '" + asset_id_ + "' has no points");
  if (category_.empty()) throw Error(ErrorCode::ParseError, "asset '" + asset_id_ + "' has no category");
  const Box3 b = bounds_from_points(cloud_, 0.0);
  extent_ = b.size();
  box_center_ = b.center();
}

PointCloud center_at_centroid(PointCloud cloud) {
  if (cloud.empty()) return cloud;
  const Vec3 c = centroid_of(cloud.points);
  for (auto& p : cloud.points) p = p - c;
  return cloud;
}

AssetBank::AssetBank(std::vector<ObjectAsset> assets) : assets_(std::move(assets)) {
  if (assets_.empty()) throw Error(ErrorCode::EmptyInput, "asset bank has no assets");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < assets_.size(); ++i) {
    const auto& a = assets_[i];
    if (!ids.insert(a.asset_id()).second) {
      throw Error(ErrorCode::InvalidConfig, "duplicate asset id '" + a.asset_id() + "'");
    }
    by_category_[a.category()].push_back(i);
    sources_.insert(a.source());
  }
}

const ObjectAsset* AssetBank::find(const std::string& asset_id) const {
  for (const auto& a : assets_) {
    if (a.asset_id() == asset_id) return &a;
  }
  return nullptr;
}

bool BenchmarkSplit::is_seen(const std::string& category) const {
  return std::find(seen.begin(), seen.end(), category) != seen.end();
}

bool BenchmarkSplit::is_unseen(const std::string& category) const {
  return std::find(unseen.begin(), unseen.end(), category) != unseen.end();
}

void BenchmarkSplit::validate() const {
  for (const auto& c : seen) {
    if (is_unseen(c)) throw Error(ErrorCode::InvalidConfig, "category '" + c + "' is both seen and unseen");
  }
  for (const auto& [from, to] : similar) {
    if (!is_seen(to)) {
      throw Error(ErrorCode::InvalidConfig,
                  "similar category for '" + from + "' is '" + to + "', which is not seen");
    }
  }
}

const CategoryInfo* CategoryTable::find(const std::string& category) const {
  const auto it = categories.find(category);
  return it == categories.end() ? nullptr : &it->second;
}

SupportRole CategoryTable::role_of(const std::string& category) const {
  if (const auto* info = find(category)) return info->role;
  return catalog::default_role(category).value_or(SupportRole::Stander);
}

const CategoryInfo* CategoryTable::stats_for(const std::string& category) const {
  const auto* info = find(category);
  if (info == nullptr) return nullptr;
  if (info->has_stats()) return info;
  if (info->similar_seen_category) {
    const auto* similar = find(*info->similar_seen_category);
    if (similar != nullptr && similar->has_stats()) return similar;
  }
  return nullptr;
}

long count_points_in_box(const PointCloud& cloud, const Box3& box) {
  long n = 0;
  for (const auto& p : cloud.points) {
    if (box.contains(p, 1e-9)) ++n;
  }
  return n;
}

CategoryTable compute_category_stats(const std::vector<Scene>& scenes, const BenchmarkSplit& split) {
  split.validate();
  struct Accum {
    std::vector<double> sx, sy, sz;
    long points = 0;
  };
  std::map<std::string, Accum> acc;
  for (const auto& c : split.seen) acc[c];

  for (const auto& scene : scenes) {
    for (const auto& o : scene.objects) {
      auto it = acc.find(o.category);
      if (it == acc.end()) continue;
      it->second.sx.push_back(o.box.size().x);
      it->second.sy.push_back(o.box.size().y);
      it->second.sz.push_back(o.box.size().z);
      it->second.points += count_points_in_box(scene.cloud, o.box);
    }
  }

  std::vector<std::string> missing;
  for (const auto& c : split.seen) {
    if (acc[c].sx.empty()) missing.push_back(c);
  }
  if (!missing.empty()) {
    throw Error(ErrorCode::MissingCategoryStats,
                std::to_string(missing.size()) + " seen categories have no instances", missing);
  }

  auto role_for = [&](const std::string& c) {
    const auto it = split.roles.find(c);
    if (it != split.roles.end()) return it->second;
    return catalog::default_role(c).value_or(SupportRole::Stander);
  };

  CategoryTable table;
  for (const auto& c : split.seen) {
    const Accum& a = acc[c];
    const double n = static_cast<double>(a.sx.size());
    CategoryInfo info;
    info.split = CategorySplit::Seen;
    info.role = role_for(c);
    info.avg_size = Vec3{order_free_sum(a.sx) / n, order_free_sum(a.sy) / n, order_free_sum(a.sz) / n};
    info.avg_point_count = std::lround(static_cast<double>(a.points) / n);
    table.categories[c] = info;
  }
  for (const auto& c : split.unseen) {
    CategoryInfo info;
    info.split = CategorySplit::Unseen;
    info.role = role_for(c);
    if (const auto it = split.similar.find(c); it != split.similar.end()) {
      info.similar_seen_category = it->second;
    }
    table.categories[c] = info;
  }
  return table;
}

double normalization_scale(const ObjectAsset& asset, const CategoryTable& table) {
  const auto* stats = table.stats_for(asset.category());
  if (stats == nullptr) return 1.0;
  return stats->avg_size->norm() / asset.canonical_extent().norm();
}

PointCloud resample_points(const PointCloud& cloud, std::size_t count, RandomStream& rng,
                           double jitter) {
  const std::size_t n = cloud.size();
  if (count == n) return cloud;
  PointCloud out;
  if (count < n) {
    // Partial Fisher-Yates, then restore input order.
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = 0; i < count; ++i) {
      std::swap(idx[i], idx[i + rng.index(n - i)]);
    }
    idx.resize(count);
    std::sort(idx.begin(), idx.end());
    out.points.reserve(count);
    for (auto i : idx) {
      out.points.push_back(cloud.points[i]);
      if (cloud.has_colors()) out.colors.push_back(cloud.colors[i]);
    }
    return out;
  }
  out = cloud;
  out.points.reserve(count);
  while (out.points.size() < count) {
    const std::size_t src = rng.index(n);
    // Uniform offset inside a ball of radius `jitter`.
    Vec3 dir{rng.normal(), rng.normal(), rng.normal()};
    const double len = dir.norm();
    const double radius = jitter * std::cbrt(rng.uniform());
    const Vec3 offset = len > 0.0 ? dir * (radius / len) : Vec3{};
    out.points.push_back(cloud.points[src] + offset);
    if (cloud.has_colors()) out.colors.push_back(cloud.colors[src]);
  }
  return out;
}

ObjectAsset normalize_and_resample(const ObjectAsset& asset, const CategoryTable& table,
                                   RandomStream& rng, const NormalizeOptions& options) {
  const auto* stats = table.stats_for(asset.category());
  const double s = normalization_scale(asset, table);
  std::size_t count = 0;
  if (stats != nullptr) {
    count = static_cast<std::size_t>(std::max(1L, *stats->avg_point_count));
  } else {
    count = std::min(asset.cloud().size(), static_cast<std::size_t>(std::max(1L, table.default_point_count)));
  }

  PointCloud cloud;
  if (options.order == ResampleOrder::ScaleThenResample) {
    cloud = resample_points(scaled(asset.cloud(), s), count, rng, options.upsample_jitter);
  } else {
    cloud = scaled(resample_points(asset.cloud(), count, rng, options.upsample_jitter / s), s);
  }
  return ObjectAsset(asset.asset_id(), asset.category(), asset.source(), center_at_centroid(std::move(cloud)));
}

PointCloud augment_points(const PointCloud& cloud, RandomStream& rng, const AugmentConfig& config) {
  if (!(config.drop_ratio >= 0.0 && config.drop_ratio < 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "drop ratio must be in [0, 1)");
  }
  if (config.jitter_sigma < 0.0 || config.yaw_range < 0.0) {
    throw Error(ErrorCode::InvalidConfig, "negative jitter sigma or yaw range");
  }
  if (cloud.empty()) throw Error(ErrorCode::EmptyInput, "augment_points on empty cloud");

  const double yaw = config.yaw_range > 0.0 ? rng.uniform(-config.yaw_range, config.yaw_range) : 0.0;
  PointCloud out;
  out.points.reserve(cloud.size());
  if (yaw != 0.0) {
    const Vec3 c = centroid_of(cloud.points);
    for (const auto& p : cloud.points) {
      const Vec2 r = rotate({p.x - c.x, p.y - c.y}, yaw);
      out.points.push_back({r.x + c.x, r.y + c.y, p.z});
    }
  } else {
    out.points = cloud.points;
  }
  out.colors = cloud.colors;

  if (config.drop_ratio > 0.0) {
    PointCloud kept;
    kept.points.reserve(out.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (rng.bernoulli(config.drop_ratio)) continue;
      kept.points.push_back(out.points[i]);
      if (out.has_colors()) kept.colors.push_back(out.colors[i]);
    }
    if (kept.empty()) {
      const std::size_t i = rng.index(out.size());
      kept.points.push_back(out.points[i]);
      if (out.has_colors()) kept.colors.push_back(out.colors[i]);
    }
    out = std::move(kept);
  }

  if (config.jitter_sigma > 0.0) {
    const double sigma = config.jitter_sigma;
    auto draw = [&] { return std::clamp(rng.normal() * sigma, -3.0 * sigma, 3.0 * sigma); };
    for (auto& p : out.points) {
      p.x += draw();
      p.y += draw();
      p.z += draw();
    }
  }
  return out;
}

}  // namespace o2s
