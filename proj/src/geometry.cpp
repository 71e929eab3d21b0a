#include "o2s/geometry.hpp"

#include <algorithm>
#include <limits>
#include <tuple>

#include "o2s/error.hpp"

namespace o2s {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
// Points this close to a clip edge count as inside.
constexpr double kClipEpsilon = 1e-12;

double clamp_size(double s) { return std::max(s, kMinBoxSize); }

double cross(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

double overlap_1d(double a_lo, double a_hi, double b_lo, double b_hi) {
  return std::max(0.0, std::min(a_hi, b_hi) - std::max(a_lo, b_lo));
}

void require_axis_aligned(const Box3& a, const Box3& b, const char* op) {
  if (!a.axis_aligned() || !b.axis_aligned()) {
    throw Error(ErrorCode::WrongVariant,
                std::string(op) + " requires heading-0 boxes; use the oriented variant");
  }
}

double aabb_intersection(const Box3& a, const Box3& b) {
  double v = 1.0;
  const double ac[3] = {a.center().x, a.center().y, a.center().z};
  const double as[3] = {a.size().x, a.size().y, a.size().z};
  const double bc[3] = {b.center().x, b.center().y, b.center().z};
  const double bs[3] = {b.size().x, b.size().y, b.size().z};
  for (int i = 0; i < 3; ++i) {
    v *= overlap_1d(ac[i] - 0.5 * as[i], ac[i] + 0.5 * as[i], bc[i] - 0.5 * bs[i],
                    bc[i] + 0.5 * bs[i]);
  }
  return v;
}

}  // namespace

double wrap_angle(double radians) {
  double w = radians - kTwoPi * std::floor((radians + std::numbers::pi) / kTwoPi);
  // Rounding can land exactly on +pi.
  if (w >= std::numbers::pi) w -= kTwoPi;
  return w;
}

Vec2 rotate(Vec2 v, double radians) {
  const double c = std::cos(radians);
  const double s = std::sin(radians);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

Box3::Box3(Vec3 center, Vec3 size, double heading)
    : center_(center),
      size_{clamp_size(size.x), clamp_size(size.y), clamp_size(size.z)},
      heading_(wrap_angle(heading)) {}

std::array<Vec2, 4> Box3::footprint() const {
  const double hx = 0.5 * size_.x;
  const double hy = 0.5 * size_.y;
  const std::array<Vec2, 4> local = {Vec2{-hx, -hy}, Vec2{hx, -hy}, Vec2{hx, hy}, Vec2{-hx, hy}};
  std::array<Vec2, 4> out{};
  for (std::size_t i = 0; i < 4; ++i) {
    const Vec2 r = rotate(local[i], heading_);
    out[i] = {r.x + center_.x, r.y + center_.y};
  }
  return out;
}

std::array<Vec3, 8> Box3::corners() const {
  const auto fp = footprint();
  std::array<Vec3, 8> out{};
  for (std::size_t i = 0; i < 4; ++i) {
    out[i] = {fp[i].x, fp[i].y, bottom()};
    out[i + 4] = {fp[i].x, fp[i].y, top()};
  }
  return out;
}

Vec3 Box3::to_local(const Vec3& p) const {
  const Vec2 r = rotate({p.x - center_.x, p.y - center_.y}, -heading_);
  return {r.x, r.y, p.z - center_.z};
}

bool Box3::contains(const Vec3& p, double tolerance) const {
  const Vec3 l = to_local(p);
  return std::abs(l.x) <= 0.5 * size_.x + tolerance && std::abs(l.y) <= 0.5 * size_.y + tolerance &&
         std::abs(l.z) <= 0.5 * size_.z + tolerance;
}

bool Box3::footprint_contains(double x, double y, double tolerance) const {
  const Vec3 l = to_local({x, y, center_.z});
  return std::abs(l.x) <= 0.5 * size_.x + tolerance && std::abs(l.y) <= 0.5 * size_.y + tolerance;
}

Box3 bounds_from_points(std::span<const Vec3> points, double heading) {
  if (points.empty()) throw Error(ErrorCode::EmptyInput, "bounds_from_points on empty cloud");
  const double c = std::cos(heading);
  const double s = std::sin(heading);
  double lo[3] = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                  std::numeric_limits<double>::infinity()};
  double hi[3] = {-lo[0], -lo[1], -lo[2]};
  for (const Vec3& p : points) {
    // Rotate by -heading into the box frame.
    const double u = c * p.x + s * p.y;
    const double v = -s * p.x + c * p.y;
    const double w[3] = {u, v, p.z};
    for (int i = 0; i < 3; ++i) {
      lo[i] = std::min(lo[i], w[i]);
      hi[i] = std::max(hi[i], w[i]);
    }
  }
  const double mu = 0.5 * (lo[0] + hi[0]);
  const double mv = 0.5 * (lo[1] + hi[1]);
  const Vec3 center{c * mu - s * mv, s * mu + c * mv, 0.5 * (lo[2] + hi[2])};
  // Clamped sizes grow symmetrically about the center so every point stays inside.
  return Box3(center, {hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]}, heading);
}

double polygon_area(std::span<const Vec2> polygon) {
  if (polygon.size() < 3) return 0.0;
  double twice = 0.0;
  for (std::size_t i = 0; i < polygon.size(); ++i) {
    const Vec2& a = polygon[i];
    const Vec2& b = polygon[(i + 1) % polygon.size()];
    twice += a.x * b.y - b.x * a.y;
  }
  return 0.5 * std::abs(twice);
}

double convex_intersection_area(std::span<const Vec2> subject, std::span<const Vec2> clip) {
  std::vector<Vec2> output(subject.begin(), subject.end());
  std::vector<Vec2> input;
  input.reserve(16);
  for (std::size_t e = 0; e < clip.size() && !output.empty(); ++e) {
    const Vec2& c1 = clip[e];
    const Vec2& c2 = clip[(e + 1) % clip.size()];
    input.swap(output);
    output.clear();
    for (std::size_t i = 0; i < input.size(); ++i) {
      const Vec2& cur = input[i];
      const Vec2& prev = input[(i + input.size() - 1) % input.size()];
      const double d_cur = cross(c1, c2, cur);
      const double d_prev = cross(c1, c2, prev);
      const bool cur_in = d_cur >= -kClipEpsilon;
      const bool prev_in = d_prev >= -kClipEpsilon;
      if (cur_in != prev_in) {
        const double t = d_prev / (d_prev - d_cur);
        output.push_back({prev.x + t * (cur.x - prev.x), prev.y + t * (cur.y - prev.y)});
      }
      if (cur_in) output.push_back(cur);
    }
  }
  return polygon_area(output);
}

double intersection_volume(const Box3& a, const Box3& b) {
  if (a.axis_aligned() && b.axis_aligned()) return aabb_intersection(a, b);
  const double dz = overlap_1d(a.bottom(), a.top(), b.bottom(), b.top());
  if (dz <= 0.0) return 0.0;
  // Cheap reject on circumscribed circles.
  const double ra = 0.5 * std::hypot(a.size().x, a.size().y);
  const double rb = 0.5 * std::hypot(b.size().x, b.size().y);
  if (std::hypot(a.center().x - b.center().x, a.center().y - b.center().y) > ra + rb) return 0.0;
  // Clip in a fixed argument order so the result is exactly symmetric.
  auto key = [](const Box3& x) {
    return std::tuple(x.center().x, x.center().y, x.center().z, x.size().x, x.size().y, x.size().z, x.heading());
  };
  const bool swap = key(b) < key(a);
  const auto fa = (swap ? b : a).footprint();
  const auto fb = (swap ? a : b).footprint();
  return convex_intersection_area(fa, fb) * dz;
}

double iou3d_axis_aligned(const Box3& a, const Box3& b) {
  require_axis_aligned(a, b, "iou3d_axis_aligned");
  const double inter = aabb_intersection(a, b);
  return inter / (a.volume() + b.volume() - inter);
}

double iou3d_oriented(const Box3& a, const Box3& b) {
  if (a.axis_aligned() && b.axis_aligned()) return iou3d_axis_aligned(a, b);
  const double inter = std::min({intersection_volume(a, b), a.volume(), b.volume()});
  return inter / (a.volume() + b.volume() - inter);
}

Box3 enclosing_box(const Box3& a, const Box3& b) {
  std::array<Vec3, 16> pts{};
  const auto ca = a.corners();
  const auto cb = b.corners();
  std::copy(ca.begin(), ca.end(), pts.begin());
  std::copy(cb.begin(), cb.end(), pts.begin() + 8);
  return bounds_from_points(pts, 0.0);
}

double giou3d(const Box3& a, const Box3& b) {
  require_axis_aligned(a, b, "giou3d");
  const double inter = aabb_intersection(a, b);
  const double uni = a.volume() + b.volume() - inter;
  const double hull = enclosing_box(a, b).volume();
  return inter / uni - (hull - uni) / hull;
}

}  // namespace o2s
