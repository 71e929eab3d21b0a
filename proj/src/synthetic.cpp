#include "o2s/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "o2s/catalog.hpp"
#include "o2s/error.hpp"
#include "o2s/prompts.hpp"

namespace o2s::synthetic {
namespace {

const std::map<std::string, Vec3>& size_table() {
  static const std::map<std::string, Vec3> sizes = {
      {"bag", {0.40, 0.20, 0.35}},       {"bathtub", {1.60, 0.75, 0.55}},   {"bed", {2.00, 1.50, 0.55}},
      {"bookshelf", {0.90, 0.35, 1.80}}, {"box", {0.40, 0.35, 0.30}},       {"cabinet", {0.80, 0.50, 0.90}},
      {"chair", {0.50, 0.50, 0.90}},     {"counter", {1.50, 0.60, 0.90}},   {"curtain", {1.40, 0.10, 2.00}},
      {"desk", {1.20, 0.60, 0.75}},      {"door", {0.90, 0.10, 2.00}},      {"dresser", {1.00, 0.50, 0.80}},
      {"fridge", {0.80, 0.70, 1.80}},    {"garbage bin", {0.35, 0.35, 0.50}}, {"lamp", {0.30, 0.30, 0.50}},
      {"microwave", {0.50, 0.35, 0.30}}, {"night stand", {0.50, 0.45, 0.55}}, {"pillow", {0.50, 0.35, 0.15}},
      {"scanner", {0.45, 0.35, 0.20}},   {"sink", {0.60, 0.50, 0.85}},      {"sofa", {2.00, 0.90, 0.80}},
      {"stool", {0.40, 0.40, 0.65}},     {"table", {1.40, 0.80, 0.75}},     {"toilet", {0.40, 0.65, 0.75}},
  };
  return sizes;
}

Vec3 jittered(const Vec3& s, RandomStream& rng, double amount) {
  return {s.x * rng.uniform(1 - amount, 1 + amount), s.y * rng.uniform(1 - amount, 1 + amount),
          s.z * rng.uniform(1 - amount, 1 + amount)};
}

bool overlaps_any(const Box3& box, const std::vector<ObjectAnnotation>& objs, double margin) {
  const Box3 grown(box.center(), box.size() + Vec3{2 * margin, 2 * margin, 0.0}, box.heading());
  return std::any_of(objs.begin(), objs.end(), [&](const ObjectAnnotation& o) {
    return intersection_volume(grown, o.box) > 0.0;
  });
}

double shell_area(const Box3& b) {
  const Vec3& s = b.size();
  return s.x * s.y + 2.0 * (s.x * s.z + s.y * s.z);
}

AnchorExpression describe(const ObjectAnnotation& o, const std::vector<ObjectAnnotation>& others, RandomStream& rng) {
  // Nearest other object, used as the expression's auxiliary object.
  const ObjectAnnotation* nearest = nullptr;
  double best = 1e300;
  for (const auto& other : others) {
    if (other.instance_id == o.instance_id) continue;
    const double d = std::hypot(other.box.center().x - o.box.center().x, other.box.center().y - o.box.center().y);
    if (d < best) {
      best = d;
      nearest = &other;
    }
  }
  const std::string aux = nearest != nullptr ? nearest->category : "wall";
  if (rng.bernoulli(0.5)) return parse_template_expression("the " + o.category + " that is close to the " + aux);
  static const char* kColors[] = {"brown", "white", "black", "gray", "wooden"};
  const std::string color = kColors[rng.index(5)];
  AnchorExpression e;
  e.text = "it is a " + color + " " + o.category + ". the " + head_noun(o.category) + " is near the " + aux + ".";
  const std::size_t words = tokenize(o.category).size();
  e.main_span = {4, 4 + words - 1};
  e.main_category = o.category;
  return e;
}

}  // namespace

Vec3 typical_size(const std::string& category) {
  const auto& t = size_table();
  const auto it = t.find(category);
  return it != t.end() ? it->second : Vec3{0.5, 0.5, 0.5};
}

PointCloud box_shell(const Box3& box, std::size_t count, RandomStream& rng) {
  const Vec3& s = box.size();
  const double areas[5] = {s.x * s.y, s.x * s.z, s.x * s.z, s.y * s.z, s.y * s.z};
  const double total = areas[0] + areas[1] + areas[2] + areas[3] + areas[4];
  PointCloud out;
  out.points.reserve(count);
  const double hx = 0.5 * s.x, hy = 0.5 * s.y, hz = 0.5 * s.z;
  for (std::size_t i = 0; i < count; ++i) {
    double pick = rng.uniform(0.0, total);
    int face = 0;
    while (face < 4 && pick >= areas[face]) pick -= areas[face++];
    const double u = rng.uniform(-1.0, 1.0);
    const double v = rng.uniform(-1.0, 1.0);
    Vec3 l;
    switch (face) {
      case 0: l = {u * hx, v * hy, hz}; break;
      case 1: l = {u * hx, -hy, v * hz}; break;
      case 2: l = {u * hx, hy, v * hz}; break;
      case 3: l = {-hx, u * hy, v * hz}; break;
      default: l = {hx, u * hy, v * hz}; break;
    }
    const Vec2 r = rotate({l.x, l.y}, box.heading());
    out.points.push_back({r.x + box.center().x, r.y + box.center().y, l.z + box.center().z});
  }
  return out;
}

Scene make_room(const std::string& scene_id, const BenchmarkSplit& split, std::uint64_t seed,
                const RoomOptions& options) {
  RandomStream rng = RandomStream::for_scene(seed, scene_id);
  auto role = [&](const std::string& c) {
    const auto it = split.roles.find(c);
    if (it != split.roles.end()) return it->second;
    return catalog::default_role(c).value_or(SupportRole::Stander);
  };

  std::vector<std::string> seen_supporters, ground, supportees;
  for (const auto* list : {&split.seen, &split.unseen}) {
    for (const auto& c : *list) {
      const SupportRole r = role(c);
      if (r == SupportRole::Supportee) {
        supportees.push_back(c);
      } else {
        ground.push_back(c);
        if (r == SupportRole::Supporter && split.is_seen(c)) seen_supporters.push_back(c);
      }
    }
  }
  if (ground.empty()) throw Error(ErrorCode::InvalidConfig, "split has no ground-standing categories");

  Scene scene;
  scene.scene_id = scene_id;
  scene.floor_z = 0.0;
  const double hx = 0.5 * options.width, hy = 0.5 * options.depth;

  auto place_on_floor = [&](const std::string& category) {
    const Vec3 size = jittered(typical_size(category), rng, 0.15);
    for (int attempt = 0; attempt < 100; ++attempt) {
      const double heading = rng.bernoulli(0.5) ? 0.0 : rng.uniform(-std::numbers::pi, std::numbers::pi);
      const double r = 0.5 * std::hypot(size.x, size.y);
      const Box3 box({rng.uniform(-hx + r, hx - r), rng.uniform(-hy + r, hy - r), 0.5 * size.z}, size, heading);
      if (overlaps_any(box, scene.objects, 0.35)) continue;
      ObjectAnnotation o;
      o.instance_id = "obj_" + std::to_string(scene.objects.size());
      o.category = category;
      o.box = box;
      o.role = role(category);
      o.source = "scan";
      o.heading_known = rng.bernoulli(0.5);
      scene.objects.push_back(o);
      return;
    }
  };

  for (std::size_t i = 0; i < std::min<std::size_t>(2, seen_supporters.size()); ++i) place_on_floor(seen_supporters[i]);
  for (int i = static_cast<int>(scene.objects.size()); i < options.ground_objects; ++i) {
    place_on_floor(ground[rng.index(ground.size())]);
  }

  std::vector<std::size_t> supporters;
  for (std::size_t i = 0; i < scene.objects.size(); ++i) {
    if (scene.objects[i].role == SupportRole::Supporter) supporters.push_back(i);
  }
  for (int n = 0; n < options.supported_objects && !supporters.empty() && !supportees.empty(); ++n) {
    const ObjectAnnotation base = scene.objects[supporters[rng.index(supporters.size())]];
    const std::string category = supportees[rng.index(supportees.size())];
    Vec3 size = jittered(typical_size(category), rng, 0.15);
    size.x = std::min(size.x, 0.8 * base.box.size().x);
    size.y = std::min(size.y, 0.8 * base.box.size().y);
    for (int attempt = 0; attempt < 30; ++attempt) {
      const double lx = rng.uniform(-0.5, 0.5) * (base.box.size().x - size.x);
      const double ly = rng.uniform(-0.5, 0.5) * (base.box.size().y - size.y);
      const Vec2 off = rotate({lx, ly}, base.box.heading());
      const Box3 box({base.box.center().x + off.x, base.box.center().y + off.y, base.box.top() + 0.5 * size.z}, size,
                     base.box.heading());
      if (overlaps_any(box, scene.objects, 0.02)) continue;
      ObjectAnnotation o;
      o.instance_id = "obj_" + std::to_string(scene.objects.size());
      o.category = category;
      o.box = box;
      o.role = role(category);
      o.source = "scan";
      scene.objects.push_back(o);
      break;
    }
  }

  for (auto& o : scene.objects) {
    if (split.is_seen(o.category) && rng.bernoulli(options.expression_probability)) {
      o.referring_expressions.push_back(describe(o, scene.objects, rng));
    }
  }

  // Floor gets 40% of the budget, object shells share the rest by area.
  const auto floor_points = static_cast<std::size_t>(0.4 * static_cast<double>(options.target_points));
  scene.cloud.points.reserve(options.target_points);
  for (std::size_t i = 0; i < floor_points; ++i) {
    scene.cloud.points.push_back({rng.uniform(-hx, hx), rng.uniform(-hy, hy), 0.0});
  }
  double total_area = 0.0;
  for (const auto& o : scene.objects) total_area += shell_area(o.box);
  const std::size_t object_budget = options.target_points - floor_points;
  for (const auto& o : scene.objects) {
    const auto n = static_cast<std::size_t>(static_cast<double>(object_budget) * shell_area(o.box) / total_area);
    const PointCloud shell = box_shell(o.box, std::max<std::size_t>(n, 16), rng);
    scene.cloud.points.insert(scene.cloud.points.end(), shell.points.begin(), shell.points.end());
  }
  scene.bounds = compute_scene_bounds(scene.cloud, scene.objects);
  return scene;
}

AssetBank make_bank(const std::vector<std::string>& categories, std::uint64_t seed, const BankOptions& options) {
  RandomStream rng(seed);
  std::vector<ObjectAsset> assets;
  for (const auto& c : categories) {
    for (int i = 0; i < options.assets_per_category; ++i) {
      const std::string& source = options.sources[static_cast<std::size_t>(i) % options.sources.size()];
      // Object banks come in their own scale; normalization fixes that later.
      const Vec3 size = jittered(typical_size(c), rng, 0.25) * rng.uniform(0.5, 2.0);
      PointCloud cloud = box_shell(Box3({0, 0, 0}, size, 0.0), options.points_per_asset, rng);
      std::string id = source + "/" + c + "/" + std::to_string(i);
      std::replace(id.begin(), id.end(), ' ', '_');
      assets.emplace_back(id, c, source, center_at_centroid(std::move(cloud)));
    }
  }
  return AssetBank(std::move(assets));
}

}  // namespace o2s::synthetic
