#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "o2s/geometry.hpp"

namespace o2s {

/// Support affordance of a category: standers and supporters rest on the
/// ground; only supporters carry other objects; supportees may rest on them.
enum class SupportRole { Stander, Supporter, Supportee };

std::string_view to_string(SupportRole role);
SupportRole parse_support_role(std::string_view text);

/// Token index range [first, last], inclusive.
struct TokenSpan {
  std::size_t first = 0;
  std::size_t last = 0;

  std::size_t length() const { return last - first + 1; }
  bool contains(std::size_t i) const { return i >= first && i <= last; }
  friend bool operator==(const TokenSpan&, const TokenSpan&) = default;
};

/// A referring expression with its main-object noun already located, so the
/// main object can be demoted to an auxiliary object during prompt composition.
struct AnchorExpression {
  std::string text;
  TokenSpan main_span;
  std::string main_category;

  friend bool operator==(const AnchorExpression&, const AnchorExpression&) = default;
};

struct ObjectAnnotation {
  std::string instance_id;
  std::string category;
  Box3 box;
  SupportRole role = SupportRole::Stander;
  std::string source;
  std::vector<AnchorExpression> referring_expressions;
  // The box heading is the object's intrinsic front, usable for left/right/front/behind.
  bool heading_known = false;
  bool inserted = false;

  friend bool operator==(const ObjectAnnotation&, const ObjectAnnotation&) = default;
};

inline constexpr double kSceneBoundsSlack = 0.05;

struct Scene {
  std::string scene_id;
  PointCloud cloud;
  double floor_z = 0.0;
  std::vector<ObjectAnnotation> objects;
  Box3 bounds;

  const ObjectAnnotation* find(std::string_view instance_id) const;
  /// Throws NotFound.
  const ObjectAnnotation& at(std::string_view instance_id) const;

  friend bool operator==(const Scene&, const Scene&) = default;
};

/// Axis-aligned hull of the cloud and every object box.
Box3 compute_scene_bounds(const PointCloud& cloud, const std::vector<ObjectAnnotation>& objects);

/// Checks unique ids, non-empty categories, floor below boxes and boxes within
/// bounds. Returns a description of the first violation, or nullopt.
std::optional<std::string> validate_scene(const Scene& scene);

}  // namespace o2s
