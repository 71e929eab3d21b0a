#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

namespace o2s {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend Vec3 operator+(const Vec3& a, const Vec3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(const Vec3& a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator*(const Vec3& a, double s) { return {a.x * s, a.y * s, a.z * s}; }
  friend bool operator==(const Vec3&, const Vec3&) = default;

  double norm() const { return std::sqrt(x * x + y * y + z * z); }
};

struct Rgb {
  float r = 0.0f;
  float g = 0.0f;
  float b = 0.0f;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Ordered point set. `colors` is either empty or parallel to `points`.
struct PointCloud {
  std::vector<Vec3> points;
  std::vector<Rgb> colors;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_colors() const { return !colors.empty(); }

  friend bool operator==(const PointCloud&, const PointCloud&) = default;
};

inline constexpr double kMinBoxSize = 1e-4;

/// Wraps an angle into [-pi, pi).
double wrap_angle(double radians);

/// Yaw-only oriented box. Sizes are clamped to kMinBoxSize and the heading is
/// wrapped on construction so every instance satisfies the box invariants.
class Box3 {
 public:
  Box3() : Box3({0, 0, 0}, {1, 1, 1}, 0.0) {}
  Box3(Vec3 center, Vec3 size, double heading = 0.0);

  const Vec3& center() const { return center_; }
  const Vec3& size() const { return size_; }
  double heading() const { return heading_; }

  double volume() const { return size_.x * size_.y * size_.z; }
  double bottom() const { return center_.z - 0.5 * size_.z; }
  double top() const { return center_.z + 0.5 * size_.z; }
  bool axis_aligned() const { return heading_ == 0.0; }

  /// Footprint corners, counter-clockwise.
  std::array<Vec2, 4> footprint() const;
  std::array<Vec3, 8> corners() const;

  /// Point in the box's local frame (origin at center, x along heading).
  Vec3 to_local(const Vec3& p) const;
  bool contains(const Vec3& p, double tolerance = 0.0) const;
  bool footprint_contains(double x, double y, double tolerance = 0.0) const;

  Box3 translated(const Vec3& offset) const { return {center_ + offset, size_, heading_}; }

  friend bool operator==(const Box3&, const Box3&) = default;

 private:
  Vec3 center_;
  Vec3 size_;
  double heading_;
};

/// Rotates (x, y) by `radians` about the origin.
Vec2 rotate(Vec2 v, double radians);

/// Tightest box at `heading` containing every point. Throws EmptyInput.
Box3 bounds_from_points(std::span<const Vec3> points, double heading = 0.0);
inline Box3 bounds_from_points(const PointCloud& cloud, double heading = 0.0) {
  return bounds_from_points(std::span<const Vec3>(cloud.points), heading);
}

/// Area of the intersection of two convex CCW polygons.
double convex_intersection_area(std::span<const Vec2> subject, std::span<const Vec2> clip);
double polygon_area(std::span<const Vec2> polygon);

/// Intersection volume of two yaw-rotated boxes (BEV clip times z overlap).
double intersection_volume(const Box3& a, const Box3& b);

/// Requires both headings to be 0 (WrongVariant otherwise).
double iou3d_axis_aligned(const Box3& a, const Box3& b);
double iou3d_oriented(const Box3& a, const Box3& b);
/// Axis-aligned generalized IoU; WrongVariant for non-zero headings.
double giou3d(const Box3& a, const Box3& b);
/// Axis-aligned hull of both boxes' corners.
Box3 enclosing_box(const Box3& a, const Box3& b);

}  // namespace o2s
