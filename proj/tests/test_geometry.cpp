#include <random>

#include "doctest.h"

#include "wayfind/geometry.hpp"

using namespace wayfind;

TEST_CASE("signed area follows winding") {
  const Polygon ccw = {{0, 0}, {4, 0}, {4, 3}, {0, 3}};
  const Polygon cw(ccw.rbegin(), ccw.rend());
  CHECK(signed_area(ccw) == 12.0);
  CHECK(signed_area(cw) == -12.0);
  CHECK(area(cw) == 12.0);
  CHECK(centroid(ccw) == Vec2{2, 1.5});
}

TEST_CASE("point in polygon on a concave ring") {
  const Polygon l = {{0, 0}, {10, 0}, {10, 2}, {2, 2}, {2, 10}, {0, 10}};
  CHECK(point_in_polygon(l, {1, 1}));
  CHECK(point_in_polygon(l, {1, 9}));
  CHECK(point_in_polygon(l, {9, 1}));
  CHECK_FALSE(point_in_polygon(l, {5, 5}));
  CHECK_FALSE(point_in_polygon(l, {-1, 1}));
}

TEST_CASE("closest points") {
  const Segment s{{0, 0}, {10, 0}};
  CHECK(closest_point_on_segment({5, 3}, s) == Vec2{5, 0});
  CHECK(closest_point_on_segment({-4, 3}, s) == Vec2{0, 0});
  CHECK(distance_to_segment({13, 4}, s) == doctest::Approx(5.0));
  const Polygon sq = {{0, 0}, {2, 0}, {2, 2}, {0, 2}};
  CHECK(closest_point_in_convex(sq, {1, 1}) == Vec2{1, 1});
  CHECK(closest_point_in_convex(sq, {5, 1}) == Vec2{2, 1});
  CHECK(closest_point_in_convex(sq, {-3, -4}) == Vec2{0, 0});
}

TEST_CASE("simplicity") {
  CHECK(is_simple(Polygon{{0, 0}, {4, 0}, {4, 4}, {0, 4}}));
  CHECK_FALSE(is_simple(Polygon{{0, 0}, {4, 4}, {4, 0}, {0, 4}}));
}

TEST_CASE("segment intersection includes touching") {
  CHECK(segments_intersect({{0, 0}, {2, 2}}, {{0, 2}, {2, 0}}));
  CHECK(segments_intersect({{0, 0}, {2, 0}}, {{2, 0}, {3, 5}}));
  CHECK_FALSE(segments_intersect({{0, 0}, {1, 0}}, {{2, 0}, {3, 0}}));
  CHECK_FALSE(segments_intersect({{0, 0}, {1, 1}}, {{0, 1}, {-1, 2}}));
}

TEST_CASE("ray against segment matches a marching oracle") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-100, 100), ang(-180, 180);
  for (int i = 0; i < 1000; ++i) {
    const Segment s{{u(rng), u(rng)}, {u(rng), u(rng)}};
    const Vec2 o{u(rng), u(rng)};
    const Vec2 d = heading(ang(rng));
    const auto t = ray_segment(o, d, s);
    // Exact hit from the line equations, solved independently.
    const Vec2 e = s.b - s.a;
    const double den = d.x * (-e.y) - d.y * (-e.x);
    std::optional<double> want;
    if (std::abs(den) > 1e-12) {
      const Vec2 w = s.a - o;
      const double tt = (w.x * (-e.y) - w.y * (-e.x)) / den;
      const double uu = (d.x * w.y - d.y * w.x) / den;
      if (tt >= 0 && uu >= 0 && uu <= 1) want = tt;
    }
    REQUIRE(t.has_value() == want.has_value());
    if (t) CHECK(*t == doctest::Approx(*want).epsilon(1e-9));
  }
}

TEST_CASE("angles and headings") {
  CHECK(wrap_degrees(180.0) == -180.0);
  CHECK(wrap_degrees(-180.0) == -180.0);
  CHECK(wrap_degrees(370.0) == doctest::Approx(10.0));
  CHECK(wrap_degrees(-190.0) == doctest::Approx(170.0));
  const Vec2 h = heading(90.0);
  CHECK(h.x == doctest::Approx(0.0));
  CHECK(h.y == doctest::Approx(1.0));
}

TEST_CASE("polyline length") {
  const std::vector<Vec3> pts = {{0, 0, 0}, {3, 4, 0}, {3, 4, 12}};
  CHECK(polyline_length(pts) == doctest::Approx(17.0));
  CHECK(polyline_length(std::vector<Vec3>{}) == 0.0);
}
