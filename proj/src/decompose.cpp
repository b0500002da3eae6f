#include "wayfind/decompose.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace wayfind {

namespace {

constexpr double kXEps = 1e-7;
constexpr double kYEps = 1e-9;

struct Edge {
  Vec2 a, b;  // a.x < b.x
  double y_at(double x) const {
    if (b.x == a.x) return a.y;
    return a.y + (b.y - a.y) * (x - a.x) / (b.x - a.x);
  }
};

bool inside_region(Vec2 p, std::span<const Polygon> walkable, std::span<const Polygon> obstacles) {
  bool in = false;
  for (const auto& w : walkable) {
    if (point_in_polygon(w, p)) {
      in = true;
      break;
    }
  }
  if (!in) return false;
  for (const auto& o : obstacles) {
    if (point_in_polygon(o, p)) return false;
  }
  return true;
}

std::optional<double> crossing_x(const Edge& e, const Edge& f) {
  const Vec2 r = e.b - e.a, s = f.b - f.a;
  const double denom = cross(r, s);
  if (std::abs(denom) < 1e-12) return std::nullopt;
  const Vec2 w = f.a - e.a;
  const double t = cross(w, s) / denom;
  const double u = cross(w, r) / denom;
  if (t <= 1e-12 || t >= 1.0 - 1e-12 || u <= 1e-12 || u >= 1.0 - 1e-12) return std::nullopt;
  return e.a.x + t * r.x;
}

}  // namespace

Polygon Trapezoid::ring() const {
  Polygon r;
  auto push = [&r](Vec2 p) {
    if (r.empty() || distance(r.back(), p) > 1e-9) r.push_back(p);
  };
  push({x0, bottom0});
  push({x1, bottom1});
  push({x1, top1});
  push({x0, top0});
  if (r.size() > 1 && distance(r.front(), r.back()) <= 1e-9) r.pop_back();
  return r;
}

Decomposition decompose(std::span<const Polygon> walkable, std::span<const Polygon> obstacles) {
  std::vector<Edge> edges;
  std::vector<double> xs;
  auto add_ring = [&](const Polygon& ring) {
    for (std::size_t i = 0; i < ring.size(); ++i) {
      Vec2 a = ring[i], b = ring[(i + 1) % ring.size()];
      xs.push_back(a.x);
      if (std::abs(a.x - b.x) < kXEps) continue;
      if (a.x > b.x) std::swap(a, b);
      edges.push_back({a, b});
    }
  };
  for (const auto& w : walkable) add_ring(w);
  for (const auto& o : obstacles) add_ring(o);

  for (std::size_t i = 0; i < edges.size(); ++i) {
    for (std::size_t j = i + 1; j < edges.size(); ++j) {
      if (auto x = crossing_x(edges[i], edges[j])) xs.push_back(*x);
    }
  }
  std::sort(xs.begin(), xs.end());
  std::vector<double> bounds;
  for (double x : xs) {
    if (bounds.empty() || x - bounds.back() > kXEps) bounds.push_back(x);
  }

  Decomposition d;
  d.slab_x = bounds;
  if (bounds.size() < 2) return d;
  d.slabs.resize(bounds.size() - 1);

  for (std::size_t s = 0; s + 1 < bounds.size(); ++s) {
    const double x0 = bounds[s], x1 = bounds[s + 1];
    const double xm = 0.5 * (x0 + x1);
    struct Active {
      double y0, y1, ym;
    };
    std::vector<Active> active;
    for (const auto& e : edges) {
      if (e.a.x <= x0 + kXEps && e.b.x >= x1 - kXEps) {
        active.push_back({e.y_at(x0), e.y_at(x1), e.y_at(xm)});
      }
    }
    std::sort(active.begin(), active.end(), [](const Active& l, const Active& r) { return l.ym < r.ym; });
    std::vector<Active> uniq;
    for (const auto& a : active) {
      if (uniq.empty() || a.ym - uniq.back().ym > kYEps) uniq.push_back(a);
    }
    std::optional<std::size_t> run_start;
    for (std::size_t i = 0; i + 1 < uniq.size(); ++i) {
      const Vec2 probe{xm, 0.5 * (uniq[i].ym + uniq[i + 1].ym)};
      const bool in = inside_region(probe, walkable, obstacles);
      if (in && !run_start) run_start = i;
      const bool run_ends = run_start && (!in || i + 2 == uniq.size());
      if (run_ends) {
        const std::size_t top = in ? i + 1 : i;
        const Active& lo = uniq[*run_start];
        const Active& hi = uniq[top];
        d.slabs[s].push_back(static_cast<int>(d.cells.size()));
        d.cells.push_back({static_cast<int>(s), x0, x1, lo.y0, lo.y1, hi.y0, hi.y1});
        run_start.reset();
      }
    }
  }
  return d;
}

std::vector<SharedSide> shared_sides(const Decomposition& d) {
  std::vector<SharedSide> out;
  for (std::size_t s = 0; s + 1 < d.slabs.size(); ++s) {
    for (int l : d.slabs[s]) {
      const auto& L = d.cells[l];
      for (int r : d.slabs[s + 1]) {
        const auto& R = d.cells[r];
        const double lo = std::max(L.bottom1, R.bottom0);
        const double hi = std::min(L.top1, R.top0);
        if (hi - lo > 1e-6) out.push_back({l, r, L.x1, lo, hi});
      }
    }
  }
  return out;
}

namespace {

// Subtracts covered intervals from [lo, hi].
std::vector<std::pair<double, double>> uncovered(double lo, double hi, std::vector<std::pair<double, double>> cover) {
  std::sort(cover.begin(), cover.end());
  std::vector<std::pair<double, double>> out;
  double cur = lo;
  for (auto [a, b] : cover) {
    if (b <= cur) continue;
    if (a > cur + 1e-9) out.emplace_back(cur, std::min(a, hi));
    cur = std::max(cur, b);
    if (cur >= hi) break;
  }
  if (hi - cur > 1e-9) out.emplace_back(cur, hi);
  return out;
}

struct PointKey {
  long long x, y;
  auto operator<=>(const PointKey&) const = default;
};

PointKey key_of(Vec2 p) { return {std::llround(p.x * 1e6), std::llround(p.y * 1e6)}; }

}  // namespace

std::vector<Segment> region_boundary(const Decomposition& d) {
  std::vector<Segment> segs;
  for (const auto& c : d.cells) {
    if (distance(Vec2{c.x0, c.bottom0}, Vec2{c.x1, c.bottom1}) > 1e-9) segs.push_back({{c.x0, c.bottom0}, {c.x1, c.bottom1}});
    if (distance(Vec2{c.x0, c.top0}, Vec2{c.x1, c.top1}) > 1e-9) segs.push_back({{c.x1, c.top1}, {c.x0, c.top0}});
  }
  const auto sides = shared_sides(d);
  for (std::size_t i = 0; i < d.cells.size(); ++i) {
    const auto& c = d.cells[i];
    std::vector<std::pair<double, double>> left_cover, right_cover;
    for (const auto& s : sides) {
      if (s.right == static_cast<int>(i)) left_cover.emplace_back(s.lo, s.hi);
      if (s.left == static_cast<int>(i)) right_cover.emplace_back(s.lo, s.hi);
    }
    for (auto [a, b] : uncovered(c.bottom0, c.top0, left_cover)) segs.push_back({{c.x0, b}, {c.x0, a}});
    for (auto [a, b] : uncovered(c.bottom1, c.top1, right_cover)) segs.push_back({{c.x1, a}, {c.x1, b}});
  }

  // Merge collinear pieces that meet at a vertex of degree two.
  bool merged = true;
  while (merged) {
    merged = false;
    std::map<PointKey, std::vector<std::size_t>> at;
    for (std::size_t i = 0; i < segs.size(); ++i) {
      at[key_of(segs[i].a)].push_back(i);
      at[key_of(segs[i].b)].push_back(i);
    }
    for (const auto& [k, ids] : at) {
      if (ids.size() != 2) continue;
      Segment& s = segs[ids[0]];
      Segment& t = segs[ids[1]];
      const Vec2 shared = key_of(s.a) == k ? s.a : s.b;
      const Vec2 s_far = key_of(s.a) == k ? s.b : s.a;
      const Vec2 t_far = key_of(t.a) == k ? t.b : t.a;
      const Vec2 u = s_far - shared, v = t_far - shared;
      if (std::abs(cross(u, v)) > 1e-6 * norm(u) * norm(v) || dot(u, v) >= 0.0) continue;
      // Keep the traversal direction of s.
      if (key_of(s.b) == k) {
        s = {s.a, t_far};
      } else {
        s = {t_far, s.b};
      }
      segs.erase(segs.begin() + static_cast<std::ptrdiff_t>(ids[1]));
      merged = true;
      break;
    }
  }
  return segs;
}

}  // namespace wayfind
