#include "wayfind/navmesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "json.hpp"

#include "wayfind/error.hpp"

namespace wayfind {

NavMesh build_navmesh(const BuildingSpec& spec) {
  NavMesh mesh;
  for (const auto& f : spec.floors) {
    std::vector<Polygon> walk, obs;
    for (const auto& w : f.walkable) {
      if (area(w.polygon) < 1e-6) {
        throw Error("triangulation failure: degenerate walkable polygon " + w.id + " on floor " + std::to_string(f.id));
      }
      walk.push_back(w.polygon);
    }
    for (const auto& o : f.obstacles) obs.push_back(o.polygon);
    const Decomposition d = decompose(walk, obs);

    NavMesh::FloorIndex idx;
    idx.z = f.z_cm;
    idx.slab_x = d.slab_x;
    idx.slabs.resize(d.slabs.size());
    const int base = static_cast<int>(mesh.cells_.size());
    for (const auto& t : d.cells) {
      NavCell c;
      c.floor = f.id;
      c.trap = t;
      c.ring = t.ring();
      idx.slabs[t.slab].push_back(static_cast<int>(mesh.cells_.size()));
      idx.cells.push_back(static_cast<int>(mesh.cells_.size()));
      mesh.cells_.push_back(std::move(c));
    }
    for (const auto& s : shared_sides(d)) {
      Portal p{base + s.left, base + s.right, f.id, s.x, s.lo, s.hi};
      const int pid = static_cast<int>(mesh.portals_.size());
      mesh.cells_[p.left_cell].portals.push_back(pid);
      mesh.cells_[p.right_cell].portals.push_back(pid);
      mesh.portals_.push_back(p);
    }
    mesh.floors_.emplace(f.id, std::move(idx));
  }

  for (const auto& s : spec.staircases) {
    for (const auto& fl : s.flights) {
      StairLink link;
      link.staircase = s.label;
      link.lower_floor = fl.lower_floor;
      link.upper_floor = fl.upper_floor;
      link.lower_node = fl.lower_landing();
      link.upper_node = fl.upper_landing();
      link.ramp = fl.ramp;
      link.width_cm = fl.width_cm;
      link.length_cm = polyline_length(fl.ramp);
      const auto lo = mesh.cells_at(fl.lower_floor, link.lower_node.xy());
      const auto up = mesh.cells_at(fl.upper_floor, link.upper_node.xy());
      if (lo.empty() || up.empty()) {
        throw Error("staircase " + s.label + ": landing outside the walkable mesh");
      }
      link.lower_cell = lo.front();
      link.upper_cell = up.front();
      mesh.links_.push_back(std::move(link));
    }
  }
  return mesh;
}

const NavMesh::FloorIndex& NavMesh::index(int floor) const {
  auto it = floors_.find(floor);
  if (it == floors_.end()) throw ReferenceError("navmesh has no floor " + std::to_string(floor));
  return it->second;
}

std::vector<int> NavMesh::floor_ids() const {
  std::vector<int> ids;
  for (const auto& [id, _] : floors_) ids.push_back(id);
  return ids;
}

double NavMesh::floor_z(int floor) const { return index(floor).z; }

double NavMesh::floor_area(int floor) const {
  double a = 0.0;
  for (int c : index(floor).cells) a += cells_[c].trap.area();
  return a;
}

std::vector<Triangle> NavMesh::triangles() const {
  std::vector<Triangle> out;
  for (const auto& c : cells_) {
    for (std::size_t i = 1; i + 1 < c.ring.size(); ++i) out.push_back({c.floor, c.ring[0], c.ring[i], c.ring[i + 1]});
  }
  return out;
}

std::vector<int> NavMesh::cells_at(int floor, Vec2 p, double eps) const {
  const FloorIndex& idx = index(floor);
  std::vector<int> out;
  if (idx.slab_x.size() < 2) return out;
  auto it = std::upper_bound(idx.slab_x.begin(), idx.slab_x.end(), p.x);
  const long hit = static_cast<long>(it - idx.slab_x.begin()) - 1;
  for (long s = hit - 1; s <= hit + 1; ++s) {
    if (s < 0 || s >= static_cast<long>(idx.slabs.size())) continue;
    if (p.x < idx.slab_x[s] - eps || p.x > idx.slab_x[s + 1] + eps) continue;
    for (int c : idx.slabs[s]) {
      if (distance(closest_point_in_convex(cells_[c].ring, p), p) <= eps) out.push_back(c);
    }
  }
  return out;
}

bool NavMesh::contains(int floor, Vec2 p) const { return !cells_at(floor, p).empty(); }

Vec2 NavMesh::project(int floor, Vec2 p) const {
  if (contains(floor, p)) return p;
  Vec2 best = p;
  double best_d = std::numeric_limits<double>::infinity();
  for (int c : index(floor).cells) {
    const Vec2 q = closest_point_in_convex(cells_[c].ring, p);
    const double d = distance(p, q);
    if (d < best_d) {
      best_d = d;
      best = q;
    }
  }
  return best;
}

bool contains(const NavMesh& mesh, int floor, Vec2 p) { return mesh.contains(floor, p); }
Vec2 project_to_walkable(const NavMesh& mesh, int floor, Vec2 p) { return mesh.project(floor, p); }
PathResult shortest_path(const NavMesh& mesh, const Place& a, const Place& b, const PathOptions& opt) {
  return mesh.path(a, b, opt);
}

// ---------------------------------------------------------------------------
// String pulling

std::vector<Vec2> pull_string(Vec2 start, Vec2 goal, const std::vector<std::pair<Vec2, Vec2>>& portals) {
  std::vector<std::pair<Vec2, Vec2>> P;
  P.reserve(portals.size() + 2);
  P.emplace_back(start, start);
  P.insert(P.end(), portals.begin(), portals.end());
  P.emplace_back(goal, goal);

  std::vector<Vec2> pts{start};
  Vec2 apex = start, left = start, right = start;
  std::size_t apex_i = 0, left_i = 0, right_i = 0;
  for (std::size_t i = 1; i < P.size(); ++i) {
    const Vec2 l = P[i].first, r = P[i].second;

    if (cross(right - apex, r - apex) >= 0.0) {
      if (apex == right || cross(left - apex, r - apex) < 0.0) {
        right = r;
        right_i = i;
      } else {
        pts.push_back(left);
        apex = left;
        apex_i = left_i;
        right = left = apex;
        right_i = left_i = apex_i;
        i = apex_i;
        continue;
      }
    }
    if (cross(left - apex, l - apex) <= 0.0) {
      if (apex == left || cross(right - apex, l - apex) > 0.0) {
        left = l;
        left_i = i;
      } else {
        pts.push_back(right);
        apex = right;
        apex_i = right_i;
        right = left = apex;
        right_i = left_i = apex_i;
        i = apex_i;
        continue;
      }
    }
  }
  if (!(pts.back() == goal)) pts.push_back(goal);
  return pts;
}

// ---------------------------------------------------------------------------
// Path search

namespace {

struct Node {
  Vec2 p;
  int floor = 0;
  int portal = -1;
  int link = -1;
  bool upper = false;  // which end of `link`
  std::vector<int> cells;
};

struct Resolved {
  Vec2 p;
  std::vector<int> cells;
};

Resolved resolve(const NavMesh& mesh, const Place& place, double snap, const char* what) {
  Vec2 p = place.point.xy();
  auto cells = mesh.cells_at(place.floor, p);
  if (cells.empty()) {
    const Vec2 q = mesh.project(place.floor, p);
    if (distance(p, q) > snap) {
      throw Unreachable(std::string(what) + " point is not on the walkable mesh of floor " + std::to_string(place.floor));
    }
    p = q;
    cells = mesh.cells_at(place.floor, p);
  }
  return {p, cells};
}

}  // namespace

PathResult NavMesh::path(const Place& a, const Place& b, const PathOptions& opt) const {
  const Resolved ra = resolve(*this, a, opt.snap_cm, "start");
  const Resolved rb = resolve(*this, b, opt.snap_cm, "goal");

  std::vector<Node> nodes;
  std::vector<std::vector<int>> cell_nodes(cells_.size());
  auto add_node = [&](Node n) {
    const int id = static_cast<int>(nodes.size());
    for (int c : n.cells) cell_nodes[c].push_back(id);
    nodes.push_back(std::move(n));
    return id;
  };
  add_node({ra.p, a.floor, -1, -1, false, ra.cells});
  add_node({rb.p, b.floor, -1, -1, false, rb.cells});

  const bool single_floor = !opt.allow_stairs;
  for (std::size_t pid = 0; pid < portals_.size(); ++pid) {
    const Portal& po = portals_[pid];
    if (single_floor && po.floor != a.floor) continue;
    const double len = po.length();
    std::vector<double> ys;
    const double inset = std::min(opt.clearance_cm, 0.5 * len);
    const double lo = po.lo + inset, hi = po.hi - inset;
    if (hi - lo < 1e-6) {
      ys.push_back(0.5 * (po.lo + po.hi));
    } else {
      const int pieces = len > 200.0 ? 4 : 2;
      for (int k = 0; k <= pieces; ++k) ys.push_back(lo + (hi - lo) * k / pieces);
    }
    for (double y : ys) add_node({{po.x, y}, po.floor, static_cast<int>(pid), -1, false, {po.left_cell, po.right_cell}});
  }

  std::vector<std::pair<int, int>> link_nodes(links_.size(), {-1, -1});
  if (!single_floor) {
    for (std::size_t li = 0; li < links_.size(); ++li) {
      const StairLink& l = links_[li];
      if (opt.staircase && l.staircase != *opt.staircase) continue;
      const int lo = add_node({l.lower_node.xy(), l.lower_floor, -1, static_cast<int>(li), false,
                               cells_at(l.lower_floor, l.lower_node.xy())});
      const int up = add_node({l.upper_node.xy(), l.upper_floor, -1, static_cast<int>(li), true,
                               cells_at(l.upper_floor, l.upper_node.xy())});
      link_nodes[li] = {lo, up};
    }
  }

  // Dijkstra; prev_cell = -1 marks a stair edge.
  const std::size_t n = nodes.size();
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  std::vector<int> prev(n, -1), prev_cell(n, -2);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  dist[0] = 0.0;
  pq.emplace(0.0, 0);
  while (!pq.empty()) {
    const auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[u]) continue;
    if (u == 1) break;
    for (int c : nodes[u].cells) {
      for (int v : cell_nodes[c]) {
        if (v == u) continue;
        const double nd = d + distance(nodes[u].p, nodes[v].p);
        if (nd < dist[v]) {
          dist[v] = nd;
          prev[v] = u;
          prev_cell[v] = c;
          pq.emplace(nd, v);
        }
      }
    }
    if (nodes[u].link >= 0) {
      const auto [lo, up] = link_nodes[nodes[u].link];
      const int v = nodes[u].upper ? lo : up;
      const double nd = d + links_[nodes[u].link].length_cm;
      if (nd < dist[v]) {
        dist[v] = nd;
        prev[v] = u;
        prev_cell[v] = -1;
        pq.emplace(nd, v);
      }
    }
  }
  if (!std::isfinite(dist[1])) {
    throw Unreachable("no walkable route between floor " + std::to_string(a.floor) + " and floor " +
                      std::to_string(b.floor));
  }

  std::vector<int> seq;
  for (int v = 1; v != -1; v = prev[v]) seq.push_back(v);
  std::reverse(seq.begin(), seq.end());

  PathResult out;
  auto push = [&](Vec3 p, int floor, bool stair) {
    if (!out.waypoints.empty() && distance(out.waypoints.back(), p) < 1e-9) {
      if (stair) out.on_stair.back() = true;
      return;
    }
    out.waypoints.push_back(p);
    out.waypoint_floor.push_back(floor);
    out.on_stair.push_back(stair);
  };

  // Walk the node sequence leg by leg.
  std::size_t i = 0;
  bool leg_starts_on_stair = false;
  while (i < seq.size()) {
    const int floor = nodes[seq[i]].floor;
    const double z = floor_z(floor);
    std::size_t j = i;
    while (j + 1 < seq.size() && prev_cell[seq[j + 1]] != -1) ++j;

    std::vector<std::pair<Vec2, Vec2>> channel;
    for (std::size_t k = i + 1; k < j; ++k) {
      const Node& nd = nodes[seq[k]];
      const int from = prev_cell[seq[k]];
      const int to = prev_cell[seq[k + 1]];
      if (nd.portal < 0 || from == to) continue;
      const Portal& po = portals_[nd.portal];
      const double inset = std::min(opt.clearance_cm, 0.5 * po.length());
      const Vec2 lo{po.x, po.lo + inset}, hi{po.x, po.hi - inset};
      if (from == po.left_cell) {
        channel.emplace_back(hi, lo);
      } else {
        channel.emplace_back(lo, hi);
      }
    }
    const auto pts = pull_string(nodes[seq[i]].p, nodes[seq[j]].p, channel);
    if (out.floors_visited.empty() || out.floors_visited.back() != floor) out.floors_visited.push_back(floor);
    for (std::size_t k = 0; k < pts.size(); ++k) {
      const bool stair = (k == 0 && leg_starts_on_stair) || (k + 1 == pts.size() && j + 1 < seq.size());
      push({pts[k].x, pts[k].y, z}, floor, stair);
    }
    if (j + 1 >= seq.size()) break;

    // Stair edge seq[j] -> seq[j+1].
    const Node& from = nodes[seq[j]];
    const StairLink& link = links_[from.link];
    out.links_used.push_back(from.link);
    if (from.upper) {
      push(link.ramp[2], link.upper_floor, true);
      push(link.ramp[1], link.lower_floor, true);
    } else {
      push(link.ramp[1], link.lower_floor, true);
      push(link.ramp[2], link.upper_floor, true);
    }
    leg_starts_on_stair = true;
    i = j + 1;
  }
  out.length_cm = polyline_length(out.waypoints);
  return out;
}

std::string NavMesh::dump_json() const {
  nlohmann::json doc;
  doc["triangles"] = nlohmann::json::array();
  for (const auto& t : triangles()) {
    doc["triangles"].push_back({{"floor", t.floor}, {"a", {t.a.x, t.a.y}}, {"b", {t.b.x, t.b.y}}, {"c", {t.c.x, t.c.y}}});
  }
  doc["stair_links"] = nlohmann::json::array();
  for (const auto& l : links_) {
    nlohmann::json ramp = nlohmann::json::array();
    for (auto p : l.ramp) ramp.push_back({p.x, p.y, p.z});
    doc["stair_links"].push_back({{"staircase", l.staircase},
                                  {"lower_floor", l.lower_floor},
                                  {"upper_floor", l.upper_floor},
                                  {"ramp", ramp},
                                  {"length_cm", l.length_cm}});
  }
  return doc.dump(1);
}

}  // namespace wayfind
