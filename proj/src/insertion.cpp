#include "o2s/insertion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "o2s/error.hpp"

namespace o2s {
namespace {

// Intersections below this volume are treated as touching, not colliding.
constexpr double kCollisionVolumeEpsilon = 1e-12;

std::string fresh_instance_id(const Scene& scene) {
  for (std::size_t n = scene.objects.size();; ++n) {
    std::string id = "inserted_" + std::to_string(n);
    if (scene.find(id) == nullptr) return id;
  }
}

// Object whose box top matches the surface height under (x, y).
const ObjectAnnotation* resolve_supporter(const Scene& scene, double x, double y, double surface,
                                          double tolerance) {
  const ObjectAnnotation* best = nullptr;
  double best_gap = std::numeric_limits<double>::infinity();
  bool best_covers = false;
  for (const auto& o : scene.objects) {
    const double gap = std::abs(o.box.top() - surface);
    if (gap > tolerance) continue;
    const bool covers = o.box.footprint_contains(x, y);
    // Prefer boxes under the target center, then the closest top.
    if ((covers && !best_covers) || (covers == best_covers && gap < best_gap)) {
      best = &o;
      best_gap = gap;
      best_covers = covers;
    }
  }
  return best;
}

}  // namespace

HeightMap::HeightMap(Vec2 origin, double cell_size, std::size_t width, std::size_t depth, double floor_z)
    : origin_(origin),
      cell_size_(cell_size),
      width_(width),
      depth_(depth),
      floor_z_(floor_z),
      cells_(width * depth, floor_z) {}

std::optional<std::pair<std::size_t, std::size_t>> HeightMap::cell_of(double x, double y) const {
  const double fx = std::floor((x - origin_.x) / cell_size_);
  const double fy = std::floor((y - origin_.y) / cell_size_);
  if (fx < 0 || fy < 0 || fx >= static_cast<double>(width_) || fy >= static_cast<double>(depth_)) {
    return std::nullopt;
  }
  return std::make_pair(static_cast<std::size_t>(fx), static_cast<std::size_t>(fy));
}

Vec2 HeightMap::cell_center(std::size_t ix, std::size_t iy) const {
  return {origin_.x + (static_cast<double>(ix) + 0.5) * cell_size_,
          origin_.y + (static_cast<double>(iy) + 0.5) * cell_size_};
}

void HeightMap::add_point(const Vec3& p) {
  const auto cell = cell_of(p.x, p.y);
  if (!cell) return;
  double& v = cells_[cell->second * width_ + cell->first];
  v = std::max(v, p.z);
}

double HeightMap::max_under(const Box3& footprint) const {
  double best = floor_z_;
  if (const auto c = cell_of(footprint.center().x, footprint.center().y)) best = at(c->first, c->second);

  double lo_x = std::numeric_limits<double>::infinity(), lo_y = lo_x;
  double hi_x = -lo_x, hi_y = -lo_x;
  for (const auto& v : footprint.footprint()) {
    lo_x = std::min(lo_x, v.x);
    lo_y = std::min(lo_y, v.y);
    hi_x = std::max(hi_x, v.x);
    hi_y = std::max(hi_y, v.y);
  }
  auto index_range = [&](double lo, double hi, double origin, std::size_t n) {
    const double a = std::max(0.0, std::floor((lo - origin) / cell_size_));
    const double b = std::min(static_cast<double>(n) - 1.0, std::floor((hi - origin) / cell_size_));
    return std::make_pair(static_cast<long>(a), static_cast<long>(b));
  };
  const auto [x0, x1] = index_range(lo_x, hi_x, origin_.x, width_);
  const auto [y0, y1] = index_range(lo_y, hi_y, origin_.y, depth_);
  for (long iy = y0; iy <= y1; ++iy) {
    for (long ix = x0; ix <= x1; ++ix) {
      const Vec2 c = cell_center(static_cast<std::size_t>(ix), static_cast<std::size_t>(iy));
      if (footprint.footprint_contains(c.x, c.y, 1e-12)) {
        best = std::max(best, at(static_cast<std::size_t>(ix), static_cast<std::size_t>(iy)));
      }
    }
  }
  return best;
}

void InsertionConfig::validate() const {
  if (!(region_half_extent > 0.0) || !(cell_size > 0.0) || max_tries <= 0 || retry_budget <= 0 ||
      collision_margin < 0.0 || surface_tolerance < 0.0) {
    throw Error(ErrorCode::InvalidConfig, "insertion config needs positive extents, cell size and tries");
  }
}

std::string_view to_string(ValidityFailure f) {
  switch (f) {
    case ValidityFailure::None: return "None";
    case ValidityFailure::RoleViolation: return "RoleViolation";
    case ValidityFailure::Collision: return "Collision";
    case ValidityFailure::Unsupported: return "Unsupported";
    case ValidityFailure::OutOfBounds: return "OutOfBounds";
  }
  return "None";
}

const ObjectAnnotation& select_anchor(const Scene& scene, const BenchmarkSplit& split, RandomStream& rng) {
  std::vector<const ObjectAnnotation*> seen;
  for (const auto& o : scene.objects) {
    if (split.is_seen(o.category)) seen.push_back(&o);
  }
  if (seen.empty()) {
    throw Error(ErrorCode::NoAnchorAvailable, "scene '" + scene.scene_id + "' has no seen-category objects");
  }
  return *seen[rng.index(seen.size())];
}

const ObjectAsset& select_target(const AssetBank& bank, const std::string& anchor_category, RandomStream& rng) {
  std::vector<const ObjectAsset*> eligible;
  for (const auto& a : bank.assets()) {
    if (a.category() != anchor_category) eligible.push_back(&a);
  }
  if (eligible.empty()) {
    throw Error(ErrorCode::NoTargetAvailable, "no asset outside category '" + anchor_category + "'");
  }
  return *eligible[rng.index(eligible.size())];
}

HeightMap build_height_map(const Scene& scene, Vec2 region_center, double half_extent, double cell_size) {
  if (!(half_extent > 0.0) || !(cell_size > 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "height map needs positive extent and cell size");
  }
  const auto cells = static_cast<std::size_t>(std::ceil(2.0 * half_extent / cell_size));
  HeightMap map({region_center.x - half_extent, region_center.y - half_extent}, cell_size, cells, cells,
                scene.floor_z);
  for (const auto& p : scene.cloud.points) map.add_point(p);
  return map;
}

Box3 placed_box(const ObjectAsset& target, const Placement& placement) {
  return Box3(placement.centroid, target.canonical_extent(), placement.heading);
}

ValidityReport check_physical_validity(SupportRole target_role, SupportRole /*anchor_role*/,
                                       const Placement& placement, const Scene& scene,
                                       const Box3& target_box, const InsertionConfig& cfg) {
  auto fail = [](ValidityFailure reason, std::string detail) {
    return ValidityReport{false, reason, std::move(detail)};
  };

  const double slack = kSceneBoundsSlack;
  const Box3& b = scene.bounds;
  for (const auto& v : target_box.footprint()) {
    if (v.x < b.center().x - 0.5 * b.size().x - slack || v.x > b.center().x + 0.5 * b.size().x + slack ||
        v.y < b.center().y - 0.5 * b.size().y - slack || v.y > b.center().y + 0.5 * b.size().y + slack) {
      return fail(ValidityFailure::OutOfBounds, "footprint leaves scene bounds");
    }
  }

  const ObjectAnnotation* supporter = nullptr;
  if (placement.supported_by) {
    supporter = scene.find(*placement.supported_by);
    if (supporter == nullptr) return fail(ValidityFailure::Unsupported, "supporter not in scene");
  }
  switch (target_role) {
    case SupportRole::Stander:
    case SupportRole::Supporter:
      if (supporter != nullptr) {
        return fail(ValidityFailure::RoleViolation,
                    std::string(to_string(target_role)) + " must rest on the ground");
      }
      break;
    case SupportRole::Supportee:
      if (supporter == nullptr && !cfg.allow_on_ground_supportee) {
        return fail(ValidityFailure::RoleViolation, "supportee on ground not allowed");
      }
      if (supporter != nullptr && supporter->role != SupportRole::Supporter) {
        return fail(ValidityFailure::RoleViolation, "'" + supporter->instance_id + "' cannot support objects");
      }
      break;
  }
  if (supporter != nullptr &&
      !supporter->box.footprint_contains(target_box.center().x, target_box.center().y)) {
    return fail(ValidityFailure::Unsupported, "target center overhangs its supporter");
  }
  if (std::abs(target_box.bottom() - placement.support_surface_z) > kSupportEpsilon) {
    return fail(ValidityFailure::Unsupported, "box bottom does not rest on the support surface");
  }

  const double m = 2.0 * cfg.collision_margin;
  const Box3 inflated(target_box.center(), target_box.size() + Vec3{m, m, m}, target_box.heading());
  for (const auto& o : scene.objects) {
    if (supporter != nullptr && o.instance_id == supporter->instance_id) continue;
    if (intersection_volume(inflated, o.box) > kCollisionVolumeEpsilon) {
      return fail(ValidityFailure::Collision, "overlaps '" + o.instance_id + "'");
    }
  }
  return {};
}

Placement sample_placement(const Scene& scene, const ObjectAnnotation& anchor, const ObjectAsset& target,
                           SupportRole target_role, const InsertionConfig& cfg, RandomStream& rng) {
  cfg.validate();
  const double h = cfg.region_half_extent;
  const Vec2 center{anchor.box.center().x, anchor.box.center().y};
  const HeightMap map = build_height_map(scene, center, h, cfg.cell_size);
  const Vec3& extent = target.canonical_extent();

  for (int attempt = 0; attempt < cfg.max_tries; ++attempt) {
    const double heading = cfg.random_heading ? rng.uniform(-std::numbers::pi, std::numbers::pi) : 0.0;
    const double x = rng.uniform(center.x - h, center.x + h);
    const double y = rng.uniform(center.y - h, center.y + h);
    const Box3 footprint({x, y, 0.0}, extent, heading);
    double surface = map.max_under(footprint);

    Placement p;
    p.heading = footprint.heading();
    if (surface <= scene.floor_z + cfg.surface_tolerance) {
      surface = scene.floor_z;
    } else {
      const auto* support = resolve_supporter(scene, x, y, surface, cfg.surface_tolerance);
      if (support == nullptr) continue;  // wall, clutter or an unannotated surface
      p.supported_by = support->instance_id;
    }
    p.support_surface_z = surface;
    p.centroid = {x, y, surface + 0.5 * extent.z};

    const Box3 box = placed_box(target, p);
    if (check_physical_validity(target_role, anchor.role, p, scene, box, cfg).valid) return p;
  }
  throw Error(ErrorCode::PlacementFailed, "no valid placement for '" + target.asset_id() + "' near '" +
                                              anchor.instance_id + "' after " + std::to_string(cfg.max_tries) +
                                              " tries");
}

InsertResult insert_object(const Scene& scene, const ObjectAsset& target, SupportRole target_role,
                           const Placement& placement) {
  const PointCloud& src = target.cloud();
  const Vec3& bc = target.box_center();
  const double c = std::cos(placement.heading);
  const double s = std::sin(placement.heading);

  std::vector<Vec3> moved;
  moved.reserve(src.size());
  for (const auto& p : src.points) {
    const double lx = p.x - bc.x;
    const double ly = p.y - bc.y;
    moved.push_back({c * lx - s * ly + placement.centroid.x, s * lx + c * ly + placement.centroid.y,
                     p.z - bc.z + placement.centroid.z});
  }

  InsertResult out{scene, {}};
  ObjectAnnotation& ann = out.annotation;
  ann.instance_id = fresh_instance_id(scene);
  ann.category = target.category();
  ann.box = bounds_from_points(moved, placement.heading);
  ann.role = target_role;
  ann.source = target.source();
  ann.inserted = true;

  PointCloud& cloud = out.scene.cloud;
  const bool scene_colored = cloud.has_colors();
  const bool was_empty = cloud.empty();
  cloud.points.insert(cloud.points.end(), moved.begin(), moved.end());
  if (scene_colored) {
    if (src.has_colors()) {
      cloud.colors.insert(cloud.colors.end(), src.colors.begin(), src.colors.end());
    } else {
      cloud.colors.resize(cloud.points.size(), Rgb{0.5f, 0.5f, 0.5f});
    }
  } else if (was_empty && src.has_colors()) {
    cloud.colors = src.colors;
  }
  out.scene.objects.push_back(ann);
  out.scene.bounds = enclosing_box(scene.bounds, ann.box);
  return out;
}

AugmentResult augment_scene(const Scene& scene, const AssetBank& bank, const CategoryTable& table,
                            const BenchmarkSplit& split, const InsertionConfig& cfg, int k_inserts,
                            RandomStream& rng) {
  cfg.validate();
  if (k_inserts < 1) throw Error(ErrorCode::InvalidConfig, "k_inserts must be at least 1");

  AugmentResult result{scene, {}, 0};
  std::string last_error;
  for (int round = 0; round < k_inserts; ++round) {
    for (int attempt = 0; attempt < cfg.retry_budget; ++attempt) {
      try {
        // Anchors come from the original annotations only.
        const ObjectAnnotation& anchor = select_anchor(scene, split, rng);
        const ObjectAsset& picked = select_target(bank, anchor.category, rng);
        ObjectAsset target = normalize_and_resample(picked, table, rng, cfg.normalize);
        if (cfg.augment_targets) {
          target = ObjectAsset(target.asset_id(), target.category(), target.source(),
                               augment_points(target.cloud(), rng, cfg.augment));
        }
        const SupportRole role = table.role_of(target.category());
        const Placement placement = sample_placement(result.scene, anchor, target, role, cfg, rng);
        InsertResult inserted = insert_object(result.scene, target, role, placement);
        result.records.push_back({anchor.instance_id, target.asset_id(), inserted.annotation, placement});
        result.scene = std::move(inserted.scene);
        break;
      } catch (const Error& e) {
        if (e.code() == ErrorCode::NoAnchorAvailable || e.code() == ErrorCode::NoTargetAvailable) {
          throw Error(ErrorCode::AugmentationFailed, e.what());
        }
        if (e.code() != ErrorCode::PlacementFailed) throw;
        last_error = e.what();
        ++result.failed_attempts;
      }
    }
  }
  if (result.records.empty()) {
    throw Error(ErrorCode::AugmentationFailed,
                "no insertion succeeded in scene '" + scene.scene_id + "' (" + last_error + ")");
  }
  return result;
}

}  // namespace o2s
