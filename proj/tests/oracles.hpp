#pragma once

// Independent reference implementations used by the unit tests and the
// acceptance gate. They read the BuildingSpec directly and share no code
// with the mesh, so agreement between the two is evidence, not tautology.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <queue>
#include <vector>

#include "wayfind/building.hpp"

namespace oracle {

using wayfind::BuildingSpec;
using wayfind::Floor;
using wayfind::Place;
using wayfind::Polygon;
using wayfind::Vec2;
using wayfind::Vec3;

// Crossing number, written out here rather than reusing the library's.
inline bool inside(const Polygon& poly, Vec2 p) {
  bool in = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Vec2 a = poly[i], b = poly[j];
    if ((a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x) in = !in;
  }
  return in;
}

inline bool region_contains(const Floor& f, Vec2 p) {
  bool walk = false;
  for (const auto& w : f.walkable) walk = walk || inside(w.polygon, p);
  if (!walk) return false;
  for (const auto& o : f.obstacles) {
    if (inside(o.polygon, p)) return false;
  }
  return true;
}

/// Distance from p to the closest boundary edge of any walkable or obstacle polygon.
inline double boundary_distance(const Floor& f, Vec2 p) {
  double best = std::numeric_limits<double>::infinity();
  auto scan = [&](const Polygon& poly) {
    for (std::size_t i = 0; i < poly.size(); ++i) {
      const Vec2 a = poly[i], b = poly[(i + 1) % poly.size()];
      const Vec2 ab{b.x - a.x, b.y - a.y};
      const double len2 = ab.x * ab.x + ab.y * ab.y;
      double t = len2 > 0 ? ((p.x - a.x) * ab.x + (p.y - a.y) * ab.y) / len2 : 0.0;
      t = std::clamp(t, 0.0, 1.0);
      best = std::min(best, std::hypot(p.x - a.x - ab.x * t, p.y - a.y - ab.y * t));
    }
  };
  for (const auto& w : f.walkable) scan(w.polygon);
  for (const auto& o : f.obstacles) scan(o.polygon);
  return best;
}

/// Closest region point by brute force. The nearest boundary point is either
/// the foot of a perpendicular on some polygon edge, a polygon vertex, or a
/// crossing of two edges; every candidate next to the region is considered.
inline Vec2 brute_project(const Floor& f, Vec2 p) {
  if (region_contains(f, p)) return p;
  std::vector<std::pair<Vec2, Vec2>> edges;
  auto collect = [&](const Polygon& poly) {
    for (std::size_t i = 0; i < poly.size(); ++i) edges.push_back({poly[i], poly[(i + 1) % poly.size()]});
  };
  for (const auto& w : f.walkable) collect(w.polygon);
  for (const auto& o : f.obstacles) collect(o.polygon);

  std::vector<Vec2> cand;
  for (const auto& [a, b] : edges) {
    const Vec2 ab{b.x - a.x, b.y - a.y};
    const double len2 = ab.x * ab.x + ab.y * ab.y;
    const double t = std::clamp(len2 > 0 ? ((p.x - a.x) * ab.x + (p.y - a.y) * ab.y) / len2 : 0.0, 0.0, 1.0);
    cand.push_back({a.x + ab.x * t, a.y + ab.y * t});
    cand.push_back(a);
  }
  for (std::size_t i = 0; i < edges.size(); ++i) {
    for (std::size_t j = i + 1; j < edges.size(); ++j) {
      const auto [a, b] = edges[i];
      const auto [c, d] = edges[j];
      const Vec2 r{b.x - a.x, b.y - a.y}, s{d.x - c.x, d.y - c.y};
      const double den = r.x * s.y - r.y * s.x;
      if (std::abs(den) < 1e-12) continue;
      const double t = ((c.x - a.x) * s.y - (c.y - a.y) * s.x) / den;
      const double u = ((c.x - a.x) * r.y - (c.y - a.y) * r.x) / den;
      if (t >= 0 && t <= 1 && u >= 0 && u <= 1) cand.push_back({a.x + r.x * t, a.y + r.y * t});
    }
  }

  Vec2 best = p;
  double best_d = std::numeric_limits<double>::infinity();
  for (const Vec2 c : cand) {
    const double d = std::hypot(p.x - c.x, p.y - c.y);
    if (d >= best_d) continue;
    bool touches = false;
    for (int k = 0; k < 16 && !touches; ++k) {
      const double ang = (k + 0.5) * 3.14159265358979323846 / 8.0;
      touches = region_contains(f, {c.x + 0.01 * std::cos(ang), c.y + 0.01 * std::sin(ang)});
    }
    if (touches) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

/// First distance along a ray at which the marched point leaves the region.
inline double march_ray(const Floor& f, Vec2 origin, Vec2 dir, double max_cm, double step = 0.25) {
  for (double t = step; t <= max_cm; t += step) {
    if (!region_contains(f, {origin.x + dir.x * t, origin.y + dir.y * t})) return t - step / 2;
  }
  return std::numeric_limits<double>::infinity();
}

/// Exact region area by fine rasterisation (cell centres), for sanity checks.
struct Raster {
  double cell = 5.0;
  Vec2 origin;
  int nx = 0, ny = 0;
  std::vector<std::uint8_t> free;

  bool at(Vec2 p) const {
    const int ix = static_cast<int>(std::floor((p.x - origin.x) / cell));
    const int iy = static_cast<int>(std::floor((p.y - origin.y) / cell));
    if (ix < 0 || iy < 0 || ix >= nx || iy >= ny) return false;
    return free[static_cast<std::size_t>(iy) * nx + ix] != 0;
  }
};

inline Raster rasterize(const Floor& f, double cell) {
  Vec2 lo{1e300, 1e300}, hi{-1e300, -1e300};
  for (const auto& w : f.walkable) {
    for (const auto& v : w.polygon) {
      lo = {std::min(lo.x, v.x), std::min(lo.y, v.y)};
      hi = {std::max(hi.x, v.x), std::max(hi.y, v.y)};
    }
  }
  Raster r;
  r.cell = cell;
  r.origin = lo;
  r.nx = static_cast<int>(std::ceil((hi.x - lo.x) / cell));
  r.ny = static_cast<int>(std::ceil((hi.y - lo.y) / cell));
  r.free.assign(static_cast<std::size_t>(r.nx) * r.ny, 0);
  for (int iy = 0; iy < r.ny; ++iy) {
    for (int ix = 0; ix < r.nx; ++ix) {
      const Vec2 c{lo.x + (ix + 0.5) * cell, lo.y + (iy + 0.5) * cell};
      r.free[static_cast<std::size_t>(iy) * r.nx + ix] = region_contains(f, c) ? 1 : 0;
    }
  }
  return r;
}

/// Shortest walking distance on a grid graph. Nodes are the centres of free
/// coarse cells plus the query points and the stair landings; moves span up
/// to four cells in any coprime direction and are valid when every sample
/// along them is free in a fine raster. Flights connect their two landings
/// with the 3D length of the ramp.
class GridPathOracle {
 public:
  explicit GridPathOracle(const BuildingSpec& spec, double cell = 25.0, double fine = 2.5)
      : spec_(&spec), cell_(cell) {
    std::vector<std::pair<int, int>> moves;
    for (int dx = -4; dx <= 4; ++dx) {
      for (int dy = -4; dy <= 4; ++dy) {
        if ((dx || dy) && std::gcd(std::abs(dx), std::abs(dy)) == 1) moves.push_back({dx, dy});
      }
    }
    for (const auto& f : spec.floors) {
      Grid g;
      g.fine = rasterize(f, fine);
      g.origin = g.fine.origin;
      g.cell = cell_;
      g.nx = static_cast<int>(std::ceil(g.fine.nx * g.fine.cell / cell_));
      g.ny = static_cast<int>(std::ceil(g.fine.ny * g.fine.cell / cell_));
      g.id.assign(static_cast<std::size_t>(g.nx) * g.ny, -1);
      for (int iy = 0; iy < g.ny; ++iy) {
        for (int ix = 0; ix < g.nx; ++ix) {
          const Vec2 c = g.centre(ix, iy);
          if (!g.fine.at(c)) continue;
          g.id[static_cast<std::size_t>(iy) * g.nx + ix] = static_cast<int>(nodes_.size());
          nodes_.push_back({f.id, c});
        }
      }
      grids_.emplace(f.id, std::move(g));
    }
    adj_.resize(nodes_.size());
    for (std::size_t u = 0; u < nodes_.size(); ++u) {
      const Grid& g = grids_.at(nodes_[u].floor);
      const auto [ix, iy] = g.cell_of(nodes_[u].p);
      for (const auto& [dx, dy] : moves) {
        const int v = g.node(ix + dx, iy + dy);
        if (v < 0 || !clear(g, nodes_[u].p, nodes_[v].p)) continue;
        adj_[u].push_back({static_cast<std::size_t>(v), cell_ * std::hypot(dx, dy)});
      }
    }
  }

  /// Walking length between two places; infinity when unreachable.
  double length(const Place& a, const Place& b) const {
    const std::size_t n0 = nodes_.size();
    std::vector<Node> extra;
    std::vector<std::vector<std::pair<std::size_t, double>>> eadj;
    std::map<std::size_t, std::vector<std::pair<std::size_t, double>>> back;
    auto add_special = [&](int floor, Vec2 p) {
      const std::size_t id = n0 + extra.size();
      extra.push_back({floor, p});
      eadj.emplace_back();
      const Grid& g = grids_.at(floor);
      // Points on a maximum edge fall outside the half-open raster cells.
      const Vec2 q = settle(g.fine, p);
      const double off = std::hypot(p.x - q.x, p.y - q.y);
      const auto [cx, cy] = g.cell_of(q);
      for (int dy = -3; dy <= 3; ++dy) {
        for (int dx = -3; dx <= 3; ++dx) {
          const int v = g.node(cx + dx, cy + dy);
          if (v < 0 || !clear(g, q, nodes_[v].p)) continue;
          const double w = off + std::hypot(q.x - nodes_[v].p.x, q.y - nodes_[v].p.y);
          eadj.back().push_back({static_cast<std::size_t>(v), w});
          back[static_cast<std::size_t>(v)].push_back({id, w});
        }
      }
      return id;
    };
    auto link = [&](std::size_t u, std::size_t v, double w) {
      eadj[u - n0].push_back({v, w});
      eadj[v - n0].push_back({u, w});
    };

    const std::size_t src = add_special(a.floor, a.point.xy());
    const std::size_t dst = add_special(b.floor, b.point.xy());
    if (a.floor == b.floor &&
        clear(grids_.at(a.floor), settle(grids_.at(a.floor).fine, a.point.xy()), settle(grids_.at(a.floor).fine, b.point.xy()))) {
      link(src, dst, std::hypot(a.point.x - b.point.x, a.point.y - b.point.y));
    }
    for (const auto& sc : spec_->staircases) {
      for (const auto& fl : sc.flights) {
        double len = 0.0;
        for (std::size_t i = 1; i < fl.ramp.size(); ++i) {
          const Vec3 d = fl.ramp[i] - fl.ramp[i - 1];
          len += std::sqrt(d.x * d.x + d.y * d.y + d.z * d.z);
        }
        const std::size_t lo = add_special(fl.lower_floor, fl.ramp.front().xy());
        const std::size_t hi = add_special(fl.upper_floor, fl.ramp.back().xy());
        link(lo, hi, len);
      }
    }

    std::vector<double> dist(n0 + extra.size(), std::numeric_limits<double>::infinity());
    using Item = std::pair<double, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    dist[src] = 0.0;
    pq.push({0.0, src});
    while (!pq.empty()) {
      const auto [d, u] = pq.top();
      pq.pop();
      if (d > dist[u]) continue;
      if (u == dst) return d;
      auto relax = [&](std::size_t v, double w) {
        if (d + w < dist[v]) {
          dist[v] = d + w;
          pq.push({dist[v], v});
        }
      };
      if (u >= n0) {
        for (const auto& [v, w] : eadj[u - n0]) relax(v, w);
        continue;
      }
      for (const auto& [v, w] : adj_[u]) relax(v, w);
      if (auto it = back.find(u); it != back.end()) {
        for (const auto& [v, w] : it->second) relax(v, w);
      }
    }
    return std::numeric_limits<double>::infinity();
  }

 private:
  struct Node {
    int floor;
    Vec2 p;
  };
  struct Grid {
    Raster fine;
    Vec2 origin;
    int nx = 0, ny = 0;
    std::vector<int> id;
    double cell = 0.0;

    Vec2 centre(int ix, int iy) const { return {origin.x + (ix + 0.5) * cell, origin.y + (iy + 0.5) * cell}; }
    std::pair<int, int> cell_of(Vec2 p) const {
      return {static_cast<int>(std::floor((p.x - origin.x) / cell)), static_cast<int>(std::floor((p.y - origin.y) / cell))};
    }
    int node(int ix, int iy) const {
      if (ix < 0 || iy < 0 || ix >= nx || iy >= ny) return -1;
      return id[static_cast<std::size_t>(iy) * nx + ix];
    }
  };

  /// p itself when free, else the nearest free fine-cell centre within two cells.
  static Vec2 settle(const Raster& r, Vec2 p) {
    if (r.at(p)) return p;
    const int ix = static_cast<int>(std::floor((p.x - r.origin.x) / r.cell));
    const int iy = static_cast<int>(std::floor((p.y - r.origin.y) / r.cell));
    Vec2 best = p;
    double best_d = std::numeric_limits<double>::infinity();
    for (int dy = -2; dy <= 2; ++dy) {
      for (int dx = -2; dx <= 2; ++dx) {
        const Vec2 c{r.origin.x + (ix + dx + 0.5) * r.cell, r.origin.y + (iy + dy + 0.5) * r.cell};
        const double d = std::hypot(c.x - p.x, c.y - p.y);
        if (r.at(c) && d < best_d) {
          best_d = d;
          best = c;
        }
      }
    }
    return best;
  }

  static bool clear(const Grid& g, Vec2 a, Vec2 b) {
    const Raster& r = g.fine;
    const double len = std::hypot(b.x - a.x, b.y - a.y);
    const int n = std::max(1, static_cast<int>(std::ceil(len / (r.cell * 0.5))));
    for (int i = 0; i <= n; ++i) {
      const double t = static_cast<double>(i) / n;
      if (!r.at({a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t})) return false;
    }
    return true;
  }

  const BuildingSpec* spec_;
  double cell_;
  std::map<int, Grid> grids_;
  std::vector<Node> nodes_;
  std::vector<std::vector<std::pair<std::size_t, double>>> adj_;
};

}  // namespace oracle
