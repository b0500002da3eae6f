#pragma once

// Planar and spatial primitives in centimetres. Nothing here knows about
// buildings; it is shared by the mesh, the simulation and the analysis code.

#include <cmath>
#include <optional>
#include <span>
#include <vector>

namespace wayfind {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr bool operator==(const Vec2&) const = default;
};

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Vec3 operator+(Vec3 o) const { return {x + o.x, y + o.y, z + o.z}; }
  constexpr Vec3 operator-(Vec3 o) const { return {x - o.x, y - o.y, z - o.z}; }
  constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  constexpr bool operator==(const Vec3&) const = default;
  constexpr Vec2 xy() const { return {x, y}; }
};

using Polygon = std::vector<Vec2>;

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double norm(Vec3 a) { return std::sqrt(a.x * a.x + a.y * a.y + a.z * a.z); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }
inline double distance(Vec3 a, Vec3 b) { return norm(a - b); }

struct Segment {
  Vec2 a;
  Vec2 b;
  double length() const { return distance(a, b); }
};

/// Signed area, positive for counter-clockwise rings.
double signed_area(std::span<const Vec2> ring);
double area(std::span<const Vec2> ring);
Vec2 centroid(std::span<const Vec2> ring);

/// Crossing-number test. Points exactly on the boundary may go either way.
bool point_in_polygon(std::span<const Vec2> ring, Vec2 p);

Vec2 closest_point_on_segment(Vec2 p, Segment s);
double distance_to_segment(Vec2 p, Segment s);

/// Closest point of a convex polygon (any winding) to p; p itself if inside.
Vec2 closest_point_in_convex(std::span<const Vec2> ring, Vec2 p);

/// True when the ring has no two non-adjacent edges touching.
bool is_simple(std::span<const Vec2> ring);

/// Proper or touching intersection of two closed segments.
bool segments_intersect(Segment s, Segment t);

/// Ray/segment hit: returns the ray parameter t >= 0 (distance when dir is unit).
std::optional<double> ray_segment(Vec2 origin, Vec2 dir, Segment s);

/// Arc length of a 3D polyline.
double polyline_length(std::span<const Vec3> pts);

/// Wraps degrees into [-180, 180).
double wrap_degrees(double deg);

inline double deg2rad(double d) { return d * 3.14159265358979323846 / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / 3.14159265358979323846; }

/// Unit heading in the plane for a yaw in degrees (0 = +x, counter-clockwise).
inline Vec2 heading(double yaw_deg) {
  const double r = deg2rad(yaw_deg);
  return {std::cos(r), std::sin(r)};
}

}  // namespace wayfind
