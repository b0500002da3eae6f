#include "wayfind/geometry.hpp"

#include <algorithm>
#include <limits>

namespace wayfind {

double signed_area(std::span<const Vec2> ring) {
  double s = 0.0;
  const std::size_t n = ring.size();
  for (std::size_t i = 0; i < n; ++i) {
    s += cross(ring[i], ring[(i + 1) % n]);
  }
  return 0.5 * s;
}

double area(std::span<const Vec2> ring) { return std::abs(signed_area(ring)); }

Vec2 centroid(std::span<const Vec2> ring) {
  const double a = signed_area(ring);
  if (std::abs(a) < 1e-12) {
    Vec2 c;
    for (auto p : ring) c = c + p;
    return ring.empty() ? c : c * (1.0 / static_cast<double>(ring.size()));
  }
  double cx = 0.0, cy = 0.0;
  const std::size_t n = ring.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 p = ring[i], q = ring[(i + 1) % n];
    const double c = cross(p, q);
    cx += (p.x + q.x) * c;
    cy += (p.y + q.y) * c;
  }
  return {cx / (6.0 * a), cy / (6.0 * a)};
}

bool point_in_polygon(std::span<const Vec2> ring, Vec2 p) {
  bool inside = false;
  const std::size_t n = ring.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2 a = ring[i], b = ring[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x) inside = !inside;
    }
  }
  return inside;
}

Vec2 closest_point_on_segment(Vec2 p, Segment s) {
  const Vec2 d = s.b - s.a;
  const double len2 = dot(d, d);
  if (len2 <= 0.0) return s.a;
  const double t = std::clamp(dot(p - s.a, d) / len2, 0.0, 1.0);
  return s.a + d * t;
}

double distance_to_segment(Vec2 p, Segment s) { return distance(p, closest_point_on_segment(p, s)); }

Vec2 closest_point_in_convex(std::span<const Vec2> ring, Vec2 p) {
  const std::size_t n = ring.size();
  const double orient = signed_area(ring) >= 0.0 ? 1.0 : -1.0;
  bool inside = true;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a = ring[i], b = ring[(i + 1) % n];
    if (orient * cross(b - a, p - a) < 0.0) {
      inside = false;
      break;
    }
  }
  if (inside) return p;
  Vec2 best = ring[0];
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 c = closest_point_on_segment(p, {ring[i], ring[(i + 1) % n]});
    const double d = distance(c, p);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

namespace {
int orientation(Vec2 a, Vec2 b, Vec2 c) {
  const double v = cross(b - a, c - a);
  if (std::abs(v) < 1e-9) return 0;
  return v > 0 ? 1 : -1;
}

bool on_segment(Vec2 a, Vec2 b, Vec2 p) {
  return std::min(a.x, b.x) - 1e-9 <= p.x && p.x <= std::max(a.x, b.x) + 1e-9 &&
         std::min(a.y, b.y) - 1e-9 <= p.y && p.y <= std::max(a.y, b.y) + 1e-9;
}
}  // namespace

bool segments_intersect(Segment s, Segment t) {
  const int o1 = orientation(s.a, s.b, t.a);
  const int o2 = orientation(s.a, s.b, t.b);
  const int o3 = orientation(t.a, t.b, s.a);
  const int o4 = orientation(t.a, t.b, s.b);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(s.a, s.b, t.a)) return true;
  if (o2 == 0 && on_segment(s.a, s.b, t.b)) return true;
  if (o3 == 0 && on_segment(t.a, t.b, s.a)) return true;
  if (o4 == 0 && on_segment(t.a, t.b, s.b)) return true;
  return false;
}

bool is_simple(std::span<const Vec2> ring) {
  const std::size_t n = ring.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const Segment e{ring[i], ring[(i + 1) % n]};
    if (e.length() <= 0.0) return false;
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
      if (adjacent) continue;
      if (segments_intersect(e, {ring[j], ring[(j + 1) % n]})) return false;
    }
  }
  return true;
}

std::optional<double> ray_segment(Vec2 origin, Vec2 dir, Segment s) {
  const Vec2 e = s.b - s.a;
  const double denom = cross(dir, e);
  if (std::abs(denom) < 1e-12) return std::nullopt;
  const Vec2 w = s.a - origin;
  const double t = cross(w, e) / denom;
  const double u = cross(w, dir) / denom;
  if (t < 0.0 || u < -1e-12 || u > 1.0 + 1e-12) return std::nullopt;
  return t;
}

double polyline_length(std::span<const Vec3> pts) {
  double s = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) s += distance(pts[i - 1], pts[i]);
  return s;
}

double wrap_degrees(double deg) {
  double r = std::fmod(deg + 180.0, 360.0);
  if (r < 0.0) r += 360.0;
  r -= 180.0;
  if (r >= 180.0) r -= 360.0;
  return r;
}

}  // namespace wayfind
