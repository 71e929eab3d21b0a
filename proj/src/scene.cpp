#include "o2s/scene.hpp"

#include <set>

#include "o2s/error.hpp"

namespace o2s {

std::string_view to_string(SupportRole role) {
  switch (role) {
    case SupportRole::Stander: return "stander";
    case SupportRole::Supporter: return "supporter";
    case SupportRole::Supportee: return "supportee";
  }
  return "stander";
}

SupportRole parse_support_role(std::string_view text) {
  if (text == "stander") return SupportRole::Stander;
  if (text == "supporter") return SupportRole::Supporter;
  if (text == "supportee") return SupportRole::Supportee;
  throw Error(ErrorCode::ParseError, "unknown support role '" + std::string(text) + "'");
}

const ObjectAnnotation* Scene::find(std::string_view instance_id) const {
  for (const auto& o : objects) {
    if (o.instance_id == instance_id) return &o;
  }
  return nullptr;
}

const ObjectAnnotation& Scene::at(std::string_view instance_id) const {
  if (const auto* o = find(instance_id)) return *o;
  throw Error(ErrorCode::NotFound,
              "instance '" + std::string(instance_id) + "' not in scene '" + scene_id + "'");
}

Box3 compute_scene_bounds(const PointCloud& cloud, const std::vector<ObjectAnnotation>& objects) {
  std::vector<Vec3> pts;
  pts.reserve(objects.size() * 8 + 2);
  if (!cloud.empty()) {
    const Box3 b = bounds_from_points(cloud, 0.0);
    const auto c = b.corners();
    pts.push_back(c[0]);
    pts.push_back(c[6]);
  }
  for (const auto& o : objects) {
    const auto c = o.box.corners();
    pts.insert(pts.end(), c.begin(), c.end());
  }
  return bounds_from_points(pts, 0.0);
}

std::optional<std::string> validate_scene(const Scene& scene) {
  std::set<std::string> ids;
  const Box3 slack(scene.bounds.center(),
                   scene.bounds.size() + Vec3{2 * kSceneBoundsSlack, 2 * kSceneBoundsSlack,
                                              2 * kSceneBoundsSlack},
                   0.0);
  for (const auto& o : scene.objects) {
    if (!ids.insert(o.instance_id).second) return "duplicate instance_id " + o.instance_id;
    if (o.category.empty()) return "empty category on " + o.instance_id;
    if (scene.floor_z > o.box.bottom() + 1e-6) return "floor above box bottom of " + o.instance_id;
    for (const auto& c : o.box.corners()) {
      if (!slack.contains(c, 1e-9)) return "box of " + o.instance_id + " outside scene bounds";
    }
  }
  return std::nullopt;
}

}  // namespace o2s
